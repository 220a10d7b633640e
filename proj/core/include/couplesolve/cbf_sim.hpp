#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "couplesolve/graph_topology.hpp"
#include "couplesolve/problem_model.hpp"

namespace couplesolve::cbf {

/// Planar single-integrator agents, dz_i/dt = x_i.
struct MultiAgentState {
  std::vector<Eigen::Vector2d> positions;
  double time = 0.0;
};

/// g(z) = radius_sq - sum_{i in members} ||z_i - center||^2, safe when g >= 0.
struct Barrier {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius_sq = 0.0;
  std::vector<int> members;  // agent indices, ascending

  double value(const MultiAgentState& state) const;
};

struct CbfScenario {
  Graph graph;
  std::vector<Barrier> barriers;
  /// Class-K function applied to g in the barrier condition.
  std::function<double(double)> alpha = [](double g) { return g; };
  double dt = 0.01;
  int inner_iterations = 10;
  double inner_gamma = 0.01;
  /// Recompute the inner step as 1/(2 alpha_phi) at every sampling step.
  bool auto_gamma = false;
  /// Start each sampling step's slack from the previous step's output
  /// instead of zero.
  bool warm_start = false;
  MultiAgentState initial;

  /// Seven agents on a line graph, starting on a circle of radius 2 around
  /// (2, 1); barrier 1 keeps agents 1-4 near the origin (radius^2 4),
  /// barrier 2 keeps agents 4-7 near (2, 2) (radius^2 16).
  static CbfScenario seven_agent_line();
};

/// z_i(0) = (2 cos(2 pi i / n) + 2, 2 sin(2 pi i / n) + 1), i = 1..n.
MultiAgentState initial_state(int n_agents = 7);

/// Laplacian consensus input x_nom,i = sum_{j in N_i} (z_j - z_i).
std::vector<Eigen::Vector2d> nominal_consensus(const MultiAgentState& state, const Graph& graph);

/// The safety QP at the current state in coupled form:
///   min sum_i 1/2 ||x_i - x_nom,i||^2
///   s.t. sum_i 2 (z_i - c_k)' x_i + b_i^[k] <= 0 for each barrier k,
/// with per-agent offsets b_i^[k] = ||z_i - c_k||^2 - r_k^2 / |members_k|
/// plus an equal share of (g_k - alpha(g_k)), so sum_i b_i^[k] = -alpha(g_k).
ProblemSpec assemble_cbf_qp(const MultiAgentState& state, const CbfScenario& scenario);

/// z <- z + dt x
MultiAgentState euler_step(const MultiAgentState& state, const std::vector<Eigen::Vector2d>& inputs, double dt);

enum class QpSolver { kCentralized, kDistributed };

struct StepRecord {
  double time = 0.0;
  std::vector<Eigen::Vector2d> positions;  // before the step
  std::vector<double> barrier_values;      // g_k at those positions
  std::vector<Eigen::Vector2d> inputs;     // applied
  /// sum_i A_i x_i + b_i per barrier; the barrier condition holds when <= 0.
  std::vector<double> condition_residuals;
  /// Largest coupling violation over every inner iterate (distributed only).
  double inner_max_violation = 0.0;
};

struct ClosedLoopResult {
  std::vector<StepRecord> steps;
  MultiAgentState final_state;
  std::vector<double> final_barrier_values;

  double max_pairwise_distance() const;
  /// Largest condition residual over all steps.
  double max_condition_residual() const;
};

/// Simulates `horizon` seconds. Each step assembles the safety QP, solves it
/// centrally or with inner_iterations rounds of accelerated dual averaging
/// (slack reset to zero unless warm_start), applies the resulting input and
/// takes an Euler step. Throws SolverError when an agent's constraint rows
/// become linearly dependent.
ClosedLoopResult run_closed_loop(const CbfScenario& scenario, double horizon, QpSolver solver);

}  // namespace couplesolve::cbf
