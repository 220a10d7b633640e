#include "couplesolve/slack_engine.hpp"

#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "couplesolve/errors.hpp"

namespace couplesolve {

CoupledProblem make_coupled_problem(ProblemSpec spec, std::optional<WeightSet> weights) {
  spec.validate();
  CoupledProblem cp;
  cp.topology = induce_topology(spec, spec.graph);
  if (weights) {
    if (static_cast<int>(weights->size()) != cp.topology.n_constraints()) {
      throw ValidationError("weights: expected one matrix per constraint (" +
                            std::to_string(cp.topology.n_constraints()) + ")");
    }
    for (int l = 0; l < cp.topology.n_constraints(); ++l) {
      auto& w = (*weights)[static_cast<std::size_t>(l)];
      w.constraint = l;
      validate_weights(cp.topology, w);
    }
    cp.weights = std::move(*weights);
  } else {
    cp.weights = metropolis_weight_set(cp.topology);
  }
  cp.spec = std::move(spec);
  return cp;
}

SlackState zero_slack(const ConstraintTopology& topology) {
  SlackState y;
  for (const auto& members : topology.participants)
    y.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(members.size())));
  return y;
}

double squared_norm(const BlockValues& v) {
  double total = 0.0;
  for (const auto& b : v) total += b.squaredNorm();
  return total;
}

double max_abs(const BlockValues& v) {
  double m = 0.0;
  for (const auto& b : v)
    if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

BlockValues axpy(const BlockValues& a, double scale, const BlockValues& b) {
  BlockValues out = a;
  for (std::size_t l = 0; l < out.size(); ++l) out[l] += scale * b[l];
  return out;
}

Eigen::VectorXd flatten(const BlockValues& v) {
  Eigen::Index total = 0;
  for (const auto& b : v) total += b.size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (const auto& b : v) {
    flat.segment(at, b.size()) = b;
    at += b.size();
  }
  return flat;
}

BlockValues unflatten(const ConstraintTopology& topology, const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != topology.slack_dimension()) {
    throw ValidationError("slack vector has wrong length");
  }
  BlockValues v;
  Eigen::Index at = 0;
  for (const auto& members : topology.participants) {
    const auto n = static_cast<Eigen::Index>(members.size());
    v.push_back(flat.segment(at, n));
    at += n;
  }
  return v;
}

Primal Evaluation::primal() const {
  Primal x;
  x.reserve(solutions.size());
  for (const auto& s : solutions) x.push_back(s.x);
  return x;
}

namespace {

template <typename Fn>
void for_each_agent(int n_agents, int threads, Fn&& fn) {
  if (threads <= 1 || n_agents <= 1) {
    for (int i = 0; i < n_agents; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n_agents);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n_agents; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void check_slack_shape(const ConstraintTopology& topology, const SlackState& y) {
  if (static_cast<int>(y.size()) != topology.n_constraints()) throw ValidationError("slack state: wrong block count");
  for (int l = 0; l < topology.n_constraints(); ++l) {
    if (static_cast<std::size_t>(y[static_cast<std::size_t>(l)].size()) != topology.size(l)) {
      throw ValidationError("slack state: block " + std::to_string(l + 1) + " has wrong length");
    }
  }
}

}  // namespace

Evaluation evaluate(const CoupledProblem& cp, const SlackState& y, Exchange* exchange,
                    const EvaluationOptions& options) {
  const auto& topo = cp.topology;
  check_slack_shape(topo, y);
  DirectExchange direct(topo);
  Exchange& net = exchange != nullptr ? *exchange : direct;
  const int n = topo.n_agents;

  Evaluation ev;
  const auto slack_views = net.exchange(Phase::kSlackExchange, y);
  ev.subproblems.resize(static_cast<std::size_t>(n));
  ev.solutions.resize(static_cast<std::size_t>(n));
  for_each_agent(n, options.threads, [&](int i) {
    const auto idx = static_cast<std::size_t>(i);
    ev.subproblems[idx] = assemble_subproblem(i, slack_views[idx], cp.spec, topo, cp.weights);
    ev.solutions[idx] = solve_kkt(ev.subproblems[idx]);
  });

  ev.multipliers = zero_slack(topo);
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    for (int l : topo.agent_constraints(i)) {
      ev.multipliers[static_cast<std::size_t>(l)](topo.local_index(l, i)) =
          ev.solutions[idx].multiplier(ev.subproblems[idx], l);
    }
  }

  const auto multiplier_views = net.exchange(Phase::kMultiplierExchange, ev.multipliers);
  ev.gradient = zero_slack(topo);
  for (int i = 0; i < n; ++i) {
    for (const auto& received : multiplier_views[static_cast<std::size_t>(i)]) {
      ev.gradient[static_cast<std::size_t>(received.constraint)](topo.local_index(received.constraint, i)) =
          gradient_coordinate(topo, cp.weights, i, received);
    }
  }
  ev.phi = phi_value(cp.spec, ev.solutions);
  return ev;
}

std::vector<KktSolution> solve_all_agents(const CoupledProblem& cp, const SlackState& y) {
  check_slack_shape(cp.topology, y);
  DirectExchange direct(cp.topology);
  const auto views = direct.exchange(Phase::kSlackExchange, y);
  std::vector<KktSolution> out;
  for (int i = 0; i < cp.topology.n_agents; ++i) {
    out.push_back(solve_kkt(assemble_subproblem(i, views[static_cast<std::size_t>(i)], cp.spec, cp.topology, cp.weights)));
  }
  return out;
}

double phi_value(const ProblemSpec& problem, const std::vector<KktSolution>& solutions) {
  double total = 0.0;
  for (std::size_t i = 0; i < solutions.size(); ++i) total += problem.objectives[i].value(solutions[i].x);
  return total;
}

Eigen::VectorXd gradient_block(const ConstraintTopology& topology, const WeightSet& weights, int l,
                               const Eigen::VectorXd& multipliers) {
  const auto& p = weights[static_cast<std::size_t>(l)].entries;
  const auto n = static_cast<Eigen::Index>(topology.size(l));
  if (multipliers.size() != n) {
    throw ValidationError("gradient block: constraint " + std::to_string(l + 1) + " needs " + std::to_string(n) +
                          " participant multipliers");
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != k && p(j, k) == 0.0) continue;
      acc += ((j == k ? 1.0 : 0.0) - p(j, k)) * multipliers(j);
    }
    g(k) = acc;
  }
  return g;
}

double gradient_coordinate(const ConstraintTopology& topology, const WeightSet& weights, int agent,
                           const NeighborValues& received) {
  const int l = received.constraint;
  const int k = topology.local_index(l, agent);
  if (k < 0) throw ValidationError("agent does not participate in constraint " + std::to_string(l + 1));
  const auto& p = weights[static_cast<std::size_t>(l)].entries;
  const auto& members = topology.participants[static_cast<std::size_t>(l)];
  double acc = 0.0;
  for (int j : topology.neighborhoods[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)]) {
    acc += ((j == k ? 1.0 : 0.0) - p(j, k)) * received.from(members[static_cast<std::size_t>(j)]);
  }
  return acc;
}

std::vector<double> dual_consensus_errors(const WeightSet& weights, const BlockValues& multipliers) {
  std::vector<double> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(multipliers[l].size() == 0 ? 0.0 : (weights[l].laplacian_like() * multipliers[l]).norm());
  }
  return out;
}

SlackState feasible_slack_from_primal(const CoupledProblem& cp, const Primal& x, double tolerance) {
  const auto residuals = aggregate_violation(cp.spec, x);
  if (!residuals.feasible(tolerance)) {
    throw ValidationError("feasible slack: primal violates the coupling constraints");
  }
  const auto& topo = cp.topology;
  SlackState y = zero_slack(topo);
  for (int l = 0; l < topo.n_constraints(); ++l) {
    const auto& members = topo.participants[static_cast<std::size_t>(l)];
    const auto n = static_cast<Eigen::Index>(members.size());
    if (n == 0) continue;
    Eigen::VectorXd r(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const int i = members[static_cast<std::size_t>(k)];
      r(k) = cp.spec.row(i, l).dot(x[static_cast<std::size_t>(i)]) + cp.spec.offset(i, l);
    }
    const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n, r.mean()) - r;
    const Eigen::MatrixXd complement = cp.weights[static_cast<std::size_t>(l)].laplacian_like();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(complement);
    cod.setThreshold(1e-12);
    const Eigen::VectorXd yl = cod.solve(rhs);
    if ((complement * yl - rhs).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + rhs.cwiseAbs().maxCoeff())) {
      throw SolverError("feasible slack: (I - P) y = rhs is inconsistent for constraint " + std::to_string(l + 1) +
                        " (disconnected subgraph?)");
    }
    y[static_cast<std::size_t>(l)] = yl;
  }
  return y;
}

std::size_t FiniteDifferenceGradient::unreliable_count() const {
  std::size_t count = 0;
  for (const auto& block : unreliable)
    for (bool b : block) count += b ? 1 : 0;
  return count;
}

FiniteDifferenceGradient finite_difference_gradient(const CoupledProblem& cp, const SlackState& y, double step_scale) {
  if (!(step_scale > 0.0)) throw ValidationError("finite difference step must be positive");
  auto probe = [&](const SlackState& at) {
    const auto sols = solve_all_agents(cp, at);
    std::vector<std::vector<int>> active;
    for (const auto& s : sols) active.push_back(s.active_set);
    return std::pair{phi_value(cp.spec, sols), active};
  };
  const auto [phi0, active0] = probe(y);

  FiniteDifferenceGradient fd;
  fd.gradient = zero_slack(cp.topology);
  for (const auto& block : y) fd.unreliable.emplace_back(static_cast<std::size_t>(block.size()), false);
  for (std::size_t l = 0; l < y.size(); ++l) {
    for (Eigen::Index k = 0; k < y[l].size(); ++k) {
      const double h = step_scale * (1.0 + std::abs(y[l](k)));
      SlackState plus = y;
      SlackState minus = y;
      plus[l](k) += h;
      minus[l](k) -= h;
      const auto [phi_plus, active_plus] = probe(plus);
      const auto [phi_minus, active_minus] = probe(minus);
      const double central = (phi_plus - phi_minus) / (2.0 * h);
      const double forward = (phi_plus - phi0) / h;
      const double backward = (phi0 - phi_minus) / h;
      fd.gradient[l](k) = central;
      fd.unreliable[l][static_cast<std::size_t>(k)] = active_plus != active0 || active_minus != active0 ||
                                                      std::abs(forward - backward) > 1e-3 * (1.0 + std::abs(central));
    }
  }
  return fd;
}

}  // namespace couplesolve
