#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "couplesolve/graph_topology.hpp"
#include "couplesolve/local_solver.hpp"
#include "couplesolve/problem_model.hpp"
#include "couplesolve/simnet.hpp"

namespace couplesolve {

/// Slack variables y^[l], one block per constraint, one entry per
/// participant (same layout as BlockValues).
using SlackState = BlockValues;
/// Gradient of phi with respect to each slack block.
using GradientBlock = BlockValues;

/// A problem together with its derived topology and weights.
struct CoupledProblem {
  ProblemSpec spec;
  ConstraintTopology topology;
  WeightSet weights;
};

/// Validates the problem, derives the topology and either builds Metropolis
/// weights or validates the supplied ones. Throws ValidationError.
CoupledProblem make_coupled_problem(ProblemSpec spec, std::optional<WeightSet> weights = std::nullopt);

SlackState zero_slack(const ConstraintTopology& topology);
double squared_norm(const BlockValues& v);
double max_abs(const BlockValues& v);
/// a + scale * b
BlockValues axpy(const BlockValues& a, double scale, const BlockValues& b);
Eigen::VectorXd flatten(const BlockValues& v);
BlockValues unflatten(const ConstraintTopology& topology, const Eigen::VectorXd& flat);

/// One full evaluation of phi and its gradient at a slack point.
struct Evaluation {
  std::vector<LocalSubproblem> subproblems;
  std::vector<KktSolution> solutions;
  /// Own multiplier of each participant for each constraint.
  BlockValues multipliers;
  GradientBlock gradient;
  double phi = 0.0;

  Primal primal() const;
};

struct EvaluationOptions {
  /// Threads for the per-agent solves; results do not depend on it.
  int threads = 1;
};

/// Exchange y, solve every local subproblem, exchange multipliers and
/// assemble each agent's gradient coordinates from its received multipliers.
/// Passing nullptr uses direct memory access.
Evaluation evaluate(const CoupledProblem& cp, const SlackState& y, Exchange* exchange = nullptr,
                    const EvaluationOptions& options = {});

/// Per-agent KKT solutions at y.
std::vector<KktSolution> solve_all_agents(const CoupledProblem& cp, const SlackState& y);

/// sum_i f_i(x_i(y_i))
double phi_value(const ProblemSpec& problem, const std::vector<KktSolution>& solutions);

/// (I - P^[l])' * multipliers for one constraint, summed in ascending
/// participant order so it agrees bit-for-bit with gradient_coordinate.
Eigen::VectorXd gradient_block(const ConstraintTopology& topology, const WeightSet& weights, int l,
                               const Eigen::VectorXd& multipliers);

/// Agent i's coordinate of grad_{y^[l]} phi computed only from the
/// multipliers it received from N_i^[l].
double gradient_coordinate(const ConstraintTopology& topology, const WeightSet& weights, int agent,
                           const NeighborValues& received);

/// ||(I - P^[l]) multipliers^[l]|| for every constraint.
std::vector<double> dual_consensus_errors(const WeightSet& weights, const BlockValues& multipliers);

/// Slack for which the given feasible primal is feasible in the lifted
/// problem: per constraint the minimum-norm solution of
/// (I - P) y = 1 mean(r) - r, r the per-participant residuals.
/// Throws ValidationError for an infeasible x and SolverError when the
/// system is inconsistent (disconnected subgraph).
SlackState feasible_slack_from_primal(const CoupledProblem& cp, const Primal& x, double tolerance = 1e-9);

struct FiniteDifferenceGradient {
  GradientBlock gradient;
  /// Coordinates where an active set changes within the probe interval or
  /// forward and backward differences disagree by more than 1e-3 (relative).
  std::vector<std::vector<bool>> unreliable;
  std::size_t unreliable_count() const;
};

/// Central differences of phi with per-coordinate step
/// h = step_scale * (1 + |y|). Every probe re-solves all subproblems.
FiniteDifferenceGradient finite_difference_gradient(const CoupledProblem& cp, const SlackState& y,
                                                    double step_scale = 1e-5);

}  // namespace couplesolve
