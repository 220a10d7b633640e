#include "couplesolve/cbf_sim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "couplesolve/algorithms.hpp"
#include "couplesolve/centralized_oracle.hpp"
#include "couplesolve/errors.hpp"
#include "couplesolve/slack_engine.hpp"

namespace couplesolve::cbf {

double Barrier::value(const MultiAgentState& state) const {
  double g = radius_sq;
  for (int i : members) g -= (state.positions[static_cast<std::size_t>(i)] - center).squaredNorm();
  return g;
}

MultiAgentState initial_state(int n_agents) {
  MultiAgentState s;
  for (int i = 1; i <= n_agents; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / n_agents;
    s.positions.emplace_back(2.0 * std::cos(angle) + 2.0, 2.0 * std::sin(angle) + 1.0);
  }
  return s;
}

CbfScenario CbfScenario::seven_agent_line() {
  CbfScenario s;
  s.graph = Graph::line(7);
  s.barriers.push_back(Barrier{Eigen::Vector2d(0.0, 0.0), 4.0, {0, 1, 2, 3}});
  s.barriers.push_back(Barrier{Eigen::Vector2d(2.0, 2.0), 16.0, {3, 4, 5, 6}});
  s.initial = initial_state(7);
  return s;
}

std::vector<Eigen::Vector2d> nominal_consensus(const MultiAgentState& state, const Graph& graph) {
  std::vector<Eigen::Vector2d> x(state.positions.size(), Eigen::Vector2d::Zero());
  for (int i = 0; i < graph.n_agents(); ++i) {
    for (int j : graph.neighbors(i)) {
      x[static_cast<std::size_t>(i)] += state.positions[static_cast<std::size_t>(j)] - state.positions[static_cast<std::size_t>(i)];
    }
  }
  return x;
}

ProblemSpec assemble_cbf_qp(const MultiAgentState& state, const CbfScenario& scenario) {
  const int n = scenario.graph.n_agents();
  if (static_cast<int>(state.positions.size()) != n) throw ValidationError("cbf: state does not match the graph");
  const auto nominal = nominal_consensus(state, scenario.graph);
  const int m = static_cast<int>(scenario.barriers.size());

  ProblemSpec p;
  p.graph = scenario.graph;
  p.m_ineq = m;
  p.q_eq = 0;
  for (int i = 0; i < n; ++i) {
    AgentObjective f;
    f.hessian = Eigen::Matrix2d::Identity();
    f.linear = -nominal[static_cast<std::size_t>(i)];
    f.constant = 0.5 * nominal[static_cast<std::size_t>(i)].squaredNorm();
    p.objectives.push_back(f);
    AgentCoupling c;
    c.ineq_coeffs = Eigen::MatrixXd::Zero(m, 2);
    c.ineq_offset = Eigen::VectorXd::Zero(m);
    c.eq_coeffs = Eigen::MatrixXd::Zero(0, 2);
    c.eq_offset = Eigen::VectorXd::Zero(0);
    p.coupling.push_back(c);
  }
  for (int k = 0; k < m; ++k) {
    const Barrier& b = scenario.barriers[static_cast<std::size_t>(k)];
    const double g = b.value(state);
    const double share = static_cast<double>(b.members.size());
    const double alpha_correction = (g - scenario.alpha(g)) / share;
    for (int i : b.members) {
      const Eigen::Vector2d rel = state.positions[static_cast<std::size_t>(i)] - b.center;
      auto& c = p.coupling[static_cast<std::size_t>(i)];
      c.ineq_coeffs.row(k) = 2.0 * rel.transpose();
      c.ineq_offset(k) = rel.squaredNorm() - b.radius_sq / share + alpha_correction;
    }
  }
  return p;
}

MultiAgentState euler_step(const MultiAgentState& state, const std::vector<Eigen::Vector2d>& inputs, double dt) {
  if (inputs.size() != state.positions.size()) throw ValidationError("euler step: one input per agent required");
  MultiAgentState next = state;
  for (std::size_t i = 0; i < inputs.size(); ++i) next.positions[i] += dt * inputs[i];
  next.time += dt;
  return next;
}

double ClosedLoopResult::max_pairwise_distance() const {
  double d = 0.0;
  const auto& z = final_state.positions;
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = i + 1; j < z.size(); ++j) d = std::max(d, (z[i] - z[j]).norm());
  return d;
}

double ClosedLoopResult::max_condition_residual() const {
  double r = -std::numeric_limits<double>::infinity();
  for (const auto& s : steps)
    for (double v : s.condition_residuals) r = std::max(r, v);
  return r;
}

ClosedLoopResult run_closed_loop(const CbfScenario& scenario, double horizon, QpSolver solver) {
  if (!(scenario.dt > 0.0)) throw ValidationError("cbf: dt must be positive");
  if (scenario.inner_iterations < 1) throw ValidationError("cbf: inner_iterations must be at least 1");
  if (horizon < 0.0) throw ValidationError("cbf: horizon must be nonnegative");
  const auto n_steps = static_cast<long>(std::llround(horizon / scenario.dt));

  ClosedLoopResult result;
  MultiAgentState state = scenario.initial;
  SlackState carried;
  for (long step = 0; step < n_steps; ++step) {
    StepRecord rec;
    rec.time = state.time;
    rec.positions = state.positions;
    for (const auto& b : scenario.barriers) rec.barrier_values.push_back(b.value(state));

    const ProblemSpec qp = assemble_cbf_qp(state, scenario);
    Primal x;
    if (solver == QpSolver::kCentralized) {
      x = solve_centralized(qp).x_star;
    } else {
      const CoupledProblem cp = make_coupled_problem(qp);
      for (const auto& report : validate_licq(cp.spec, cp.topology)) {
        if (!report.full_row_rank) {
          throw SolverError("cbf: at t = " + std::to_string(state.time) + " agent " + std::to_string(report.agent + 1) +
                            " has linearly dependent barrier gradients");
        }
      }
      RunRequest request;
      request.algorithm = Algorithm::kAda;
      request.ada.rounds = scenario.inner_iterations;
      request.ada.gamma = scenario.auto_gamma ? default_ada_gamma(lipschitz_bound(cp.spec, cp.topology, cp.weights).alpha_phi)
                                              : scenario.inner_gamma;
      if (scenario.warm_start && carried.size() == static_cast<std::size_t>(cp.topology.n_constraints())) {
        bool same_shape = true;
        for (int l = 0; l < cp.topology.n_constraints(); ++l)
          same_shape = same_shape && static_cast<std::size_t>(carried[static_cast<std::size_t>(l)].size()) == cp.topology.size(l);
        if (same_shape) request.y0 = carried;
      }
      const RunTrace trace = run(cp, request);
      x = trace.output;
      carried = trace.final_y_hat;
      rec.inner_max_violation = std::max(trace.max_ineq_violation(), trace.max_eq_residual());
    }

    const auto residuals = aggregate_violation(qp, x);
    for (Eigen::Index k = 0; k < residuals.ineq.size(); ++k) rec.condition_residuals.push_back(residuals.ineq(k));
    for (const auto& xi : x) rec.inputs.emplace_back(xi(0), xi(1));
    state = euler_step(state, rec.inputs, scenario.dt);
    result.steps.push_back(std::move(rec));
  }
  result.final_state = state;
  for (const auto& b : scenario.barriers) result.final_barrier_values.push_back(b.value(state));
  return result;
}

}  // namespace couplesolve::cbf
