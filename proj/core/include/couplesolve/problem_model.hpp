#pragma once

#include <vector>

#include <Eigen/Dense>

#include "couplesolve/graph_topology.hpp"

namespace couplesolve {

/// Per-agent decision vectors x_i, indexed by agent.
using Primal = std::vector<Eigen::VectorXd>;

/// f(x) = 1/2 x'Hx + c'x + constant with H symmetric positive semidefinite.
struct AgentObjective {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  double constant = 0.0;

  int dim() const { return static_cast<int>(linear.size()); }
  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
};

/// Agent i's share of the coupling constraints:
///   sum_i A_i x_i + b_i <= 0   (M rows)
///   sum_i E_i x_i + g_i  = 0   (Q rows)
struct AgentCoupling {
  Eigen::MatrixXd ineq_coeffs;  // A_i, M x d_i
  Eigen::VectorXd ineq_offset;  // b_i, M
  Eigen::MatrixXd eq_coeffs;    // E_i, Q x d_i
  Eigen::VectorXd eq_offset;    // g_i, Q
};

/// The coupled separable program. Agent count is objectives.size().
struct ProblemSpec {
  std::vector<AgentObjective> objectives;
  std::vector<AgentCoupling> coupling;
  int m_ineq = 0;
  int q_eq = 0;
  Graph graph;

  int n_agents() const { return static_cast<int>(objectives.size()); }
  int n_constraints() const { return m_ineq + q_eq; }
  int total_dim() const;

  /// Coefficient row of constraint l for agent i (inequality when l < M).
  Eigen::RowVectorXd row(int agent, int l) const;
  double offset(int agent, int l) const;
  /// Agent i appears in constraint l: nonzero coefficients or nonzero offset.
  bool participates(int agent, int l) const;

  /// Throws ValidationError on inconsistent dimensions, an asymmetric or
  /// indefinite Hessian, or an agent count that disagrees with the graph.
  void validate() const;
};

/// Row rank of agent i's stacked local constraint rows.
struct LicqReport {
  int agent = 0;
  int rows = 0;
  bool full_row_rank = true;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  /// Smallest eigenvalue of the Gram matrix of the stacked rows (sigma_min^2);
  /// zero when the agent has no rows.
  double gram_lambda_min = 0.0;
};

/// Checks full row rank of each agent's rows over its constraint set, with
/// singular-value threshold sigma_min > 1e-9 * sigma_max.
std::vector<LicqReport> validate_licq(const ProblemSpec& problem, const ConstraintTopology& topology);

struct ConstraintResiduals {
  Eigen::VectorXd ineq;  // sum_i A_i x_i + b_i
  Eigen::VectorXd eq;    // sum_i E_i x_i + g_i

  /// Largest positive inequality residual (0 when all are satisfied).
  double max_ineq_violation() const;
  double max_eq_residual() const;
  bool feasible(double tolerance) const {
    return max_ineq_violation() <= tolerance && max_eq_residual() <= tolerance;
  }
};

ConstraintResiduals aggregate_violation(const ProblemSpec& problem, const Primal& x);

double objective_value(const ProblemSpec& problem, const Primal& x);

/// nu: min over agents of lambda_min(H_i).
double strong_convexity_modulus(const ProblemSpec& problem);
/// lambda_max(H_i) for one agent.
double gradient_lipschitz(const AgentObjective& objective);

/// How the per-agent multiplier sensitivity enters the smoothness bound.
enum class LipschitzRule {
  /// alpha_i / lambda_min(B_i B_i'): a valid bound on the multiplier map's
  /// Lipschitz constant for any Hessian scaling. Default.
  kConditionRatio,
  /// sqrt(alpha_i / lambda_min(B_i B_i')). Matches the ratio rule when the
  /// ratio is 1 but under-estimates the smoothness constant when the Hessian
  /// is large relative to the row Gram matrix.
  kConditionSqrt,
};

struct LipschitzBound {
  double alpha_phi = 0.0;
  /// alpha_(lambda_i, mu_i) per agent.
  std::vector<double> multiplier_constants;
  /// ||I - P^[l]||_2 per constraint.
  std::vector<double> complement_norms;
};

/// Upper bound on the Lipschitz constant of grad phi:
///   (max_i a_i) * (max_l ||I-P^[l]|| sqrt|V^[l]|) * sqrt(M+Q),
///   a_i = (max_{l in C_i} ||I-P^[l]||) * rule(alpha_i / lambda_min(B_i B_i')).
/// alpha_i is agent i's own gradient Lipschitz constant. Throws
/// ValidationError when nu = 0 or some agent fails the rank check.
LipschitzBound lipschitz_bound(const ProblemSpec& problem, const ConstraintTopology& topology,
                               const WeightSet& weights,
                               LipschitzRule rule = LipschitzRule::kConditionRatio);

}  // namespace couplesolve
