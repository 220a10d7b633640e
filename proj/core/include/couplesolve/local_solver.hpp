#pragma once

#include <vector>

#include <Eigen/Dense>

#include "couplesolve/problem_model.hpp"

namespace couplesolve {

/// Slack values an agent has received for one constraint: the values of
/// its neighbors within V^[l], itself included, keyed by agent index.
struct NeighborValues {
  int constraint = 0;
  std::vector<int> agents;  // ascending
  std::vector<double> values;

  /// Value received from `agent`; throws ValidationError if absent.
  double from(int agent) const;
};

/// Everything one agent has received in one exchange phase, one entry per
/// constraint it participates in, in agent_constraints() order.
using AgentView = std::vector<NeighborValues>;

/// Agent i's subproblem:
///   min f_i(x)  s.t.  A_i^[m] x + beta^[m] <= 0 (m in I_i),
///                      E_i^[q] x + eta^[q]  = 0 (q in E_i),
/// with beta^[m] = y_i^[m] - sum_j p_ij^[m] y_j^[m] + b_i^[m] (eta likewise).
struct LocalSubproblem {
  int agent = 0;
  AgentObjective objective;
  std::vector<int> ineq_ids;  // constraint indices m
  Eigen::MatrixXd ineq_rows;
  Eigen::VectorXd ineq_offsets;
  std::vector<int> eq_ids;  // constraint indices l = M + q
  Eigen::MatrixXd eq_rows;
  Eigen::VectorXd eq_offsets;
};

struct KktSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd mu;      // aligned with ineq_ids
  Eigen::VectorXd lambda;  // aligned with eq_ids
  std::vector<int> active_set;  // constraint indices m with the row in the final working set
  int iterations = 0;

  /// Multiplier attached to constraint l (mu for l < M, lambda otherwise).
  double multiplier(const LocalSubproblem& sub, int l) const;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal_ineq = 0.0;    // largest positive A x + beta
  double primal_eq = 0.0;      // largest |E x + eta|
  double dual = 0.0;           // largest negative part of mu
  double complementarity = 0.0;

  bool dual_feasible(double tol = 1e-12) const { return dual <= tol; }
  bool satisfied(double tol = 1e-9) const {
    return stationarity <= tol && primal_ineq <= tol && primal_eq <= tol && dual_feasible() &&
           complementarity <= tol;
  }
};

/// Builds the subproblem from the agent's received slack values. `view` must
/// hold exactly the neighborhood N_i^[l] for each constraint of the agent;
/// a missing or extra value throws ValidationError.
LocalSubproblem assemble_subproblem(int agent, const AgentView& view, const ProblemSpec& problem,
                                    const ConstraintTopology& topology, const WeightSet& weights);

/// Exact primal active-set solve of the local subproblem.
///
/// Because the agent's rows have full row rank, the point where every row
/// holds with equality is feasible; the iteration starts there with all
/// inequality rows in the working set and drops or adds rows from it.
/// Dependent rows fall back to a phase-1 start.
/// Requires the Hessian to be positive definite on the null space of the
/// final working set and throws SolverError otherwise, on an unbounded ray,
/// or after 100 * max(1, |I_i|) iterations.
KktSolution solve_kkt(const LocalSubproblem& sub);

KktResiduals verify_kkt(const LocalSubproblem& sub, const KktSolution& sol);

}  // namespace couplesolve
