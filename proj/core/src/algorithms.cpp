#include "couplesolve/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "couplesolve/errors.hpp"

namespace couplesolve {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Observation {
  double max_ineq = 0.0;
  double max_eq = 0.0;
};

Observation observe(const CoupledProblem& cp, const Primal& x, Observation acc = {}) {
  const auto r = aggregate_violation(cp.spec, x);
  acc.max_ineq = std::max(acc.max_ineq, r.max_ineq_violation());
  acc.max_eq = std::max(acc.max_eq, r.max_eq_residual());
  return acc;
}

BlockValues blend(const BlockValues& a, double weight_a, const BlockValues& b, double weight_b) {
  BlockValues out = a;
  for (std::size_t l = 0; l < out.size(); ++l) out[l] = weight_a * a[l] + weight_b * b[l];
  return out;
}

void check_preconditions(const CoupledProblem& cp, const RunRequest& request) {
  for (const auto& report : check_connectivity(cp.topology)) {
    if (!report.connected) {
      throw ValidationError("constraint " + std::to_string(report.constraint + 1) +
                            ": induced subgraph is disconnected");
    }
  }
  if (!request.allow_rank_deficient) {
    for (const auto& report : validate_licq(cp.spec, cp.topology)) {
      if (!report.full_row_rank) {
        throw ValidationError("agent " + std::to_string(report.agent + 1) +
                              ": local constraint rows are not full row rank");
      }
    }
  }
  if (request.algorithm == Algorithm::kAda) {
    if (!(request.ada.gamma > 0.0) || !std::isfinite(request.ada.gamma)) throw ValidationError("ada: gamma must be positive and finite");
    if (request.ada.rounds < 0) throw ValidationError("ada: rounds must be nonnegative");
  } else {
    if (!(request.pgd.box_bound > 0.0)) throw ValidationError("pgd: box bound C must be positive");
    if (!(request.pgd.grad_bound > 0.0)) throw ValidationError("pgd: gradient bound G must be positive");
    if (request.pgd.rounds < 0) throw ValidationError("pgd: rounds must be nonnegative");
  }
}

}  // namespace

const char* algorithm_name(Algorithm algorithm) { return algorithm == Algorithm::kAda ? "ada" : "pgd"; }

double default_ada_gamma(double alpha_phi) { return alpha_phi > 0.0 ? 1.0 / (2.0 * alpha_phi) : 1.0; }

AdaSchedule ada_schedule(int t, double gamma) {
  if (t < 1) throw ValidationError("ada schedule: t must be at least 1");
  const double td = static_cast<double>(t);
  return {gamma * (td + 1.0), gamma * td * (td + 3.0) / 2.0};
}

AdaState ada_initial_state(const SlackState& y0) { return AdaState{y0, y0, y0, 0}; }

double pgd_stepsize(int t, const PgdConfig& config, std::size_t slack_dimension) {
  if (t < 1) throw ValidationError("pgd step size: t must be at least 1");
  return std::sqrt(2.0 * config.theta(slack_dimension)) / (config.grad_bound * std::sqrt(static_cast<double>(t) + 1.0));
}

double RunTrace::max_ineq_violation() const {
  double m = 0.0;
  for (const auto& r : records) m = std::max(m, r.max_ineq_viol);
  return m;
}

double RunTrace::max_eq_residual() const {
  double m = 0.0;
  for (const auto& r : records) m = std::max(m, r.max_eq_resid);
  return m;
}

RoundRecord initial_record(const CoupledProblem& cp, const RunRequest& request, const SlackState& y0) {
  const Evaluation ev = evaluate(cp, y0, nullptr, {request.threads});
  const Observation obs = observe(cp, ev.primal());
  RoundRecord rec;
  rec.round = 0;
  rec.phi = ev.phi;
  rec.phi_hat = request.algorithm == Algorithm::kAda ? ev.phi : kNaN;
  rec.obj_err = request.f_star ? ev.phi - *request.f_star : kNaN;
  rec.max_ineq_viol = obs.max_ineq;
  rec.max_eq_resid = obs.max_eq;
  rec.dual_cons_err = dual_consensus_errors(cp.weights, ev.multipliers);
  rec.grad_inf = max_abs(ev.gradient);
  return rec;
}

RoundRecord ada_round(AdaState& state, const CoupledProblem& cp, const AdaConfig& config, Exchange& exchange,
                      const std::optional<double>& f_star, int threads) {
  const int t = state.t + 1;
  const auto [gamma_t, big_gamma_t] = ada_schedule(t, config.gamma);
  const double w = gamma_t / big_gamma_t;
  const long long before = exchange.messages();

  if (t >= 2) state.y = blend(state.y_hat, 1.0 - w, state.z, w);
  const Evaluation ev = evaluate(cp, state.y, &exchange, {threads});
  if (t == 1) {
    state.z = axpy(zero_slack(cp.topology), -gamma_t, ev.gradient);
    state.y_hat = state.z;
  } else {
    state.z = axpy(state.z, -gamma_t, ev.gradient);
    state.y_hat = blend(state.y_hat, 1.0 - w, state.z, w);
  }
  state.t = t;

  // The output x(y_hat) is observed directly; it costs no algorithm messages.
  const Evaluation out = evaluate(cp, state.y_hat, nullptr, {threads});
  const Observation obs = observe(cp, out.primal(), observe(cp, ev.primal()));

  RoundRecord rec;
  rec.round = t;
  rec.phi = ev.phi;
  rec.phi_hat = out.phi;
  rec.obj_err = f_star ? out.phi - *f_star : kNaN;
  rec.max_ineq_viol = obs.max_ineq;
  rec.max_eq_resid = obs.max_eq;
  rec.dual_cons_err = dual_consensus_errors(cp.weights, ev.multipliers);
  rec.msgs = exchange.messages() - before;
  rec.grad_inf = max_abs(ev.gradient);
  return rec;
}

RoundRecord pgd_round(SlackState& y, int t, const CoupledProblem& cp, const PgdConfig& config, Exchange& exchange,
                      const std::optional<double>& f_star, int threads) {
  const double gamma_t = pgd_stepsize(t, config, cp.topology.slack_dimension());
  const long long before = exchange.messages();
  const Evaluation ev = evaluate(cp, y, &exchange, {threads});
  for (std::size_t l = 0; l < y.size(); ++l) {
    y[l] = (y[l] - gamma_t * ev.gradient[l]).cwiseMax(-config.box_bound).cwiseMin(config.box_bound);
  }
  const Evaluation out = evaluate(cp, y, nullptr, {threads});
  const Observation obs = observe(cp, out.primal(), observe(cp, ev.primal()));

  RoundRecord rec;
  rec.round = t;
  rec.phi = out.phi;
  rec.phi_hat = kNaN;
  rec.obj_err = f_star ? out.phi - *f_star : kNaN;
  rec.max_ineq_viol = obs.max_ineq;
  rec.max_eq_resid = obs.max_eq;
  rec.dual_cons_err = dual_consensus_errors(cp.weights, ev.multipliers);
  rec.msgs = exchange.messages() - before;
  rec.grad_inf = max_abs(ev.gradient);
  return rec;
}

RunTrace run(const CoupledProblem& cp, const RunRequest& request, Exchange* exchange) {
  check_preconditions(cp, request);
  DirectExchange direct(cp.topology);
  Exchange& net = exchange != nullptr ? *exchange : direct;
  const SlackState y0 = request.y0.empty() ? zero_slack(cp.topology) : request.y0;

  RunTrace trace;
  trace.algorithm = request.algorithm;
  trace.n_constraints = cp.topology.n_constraints();
  trace.records.push_back(initial_record(cp, request, y0));

  if (request.algorithm == Algorithm::kAda) {
    if (request.alpha_phi && *request.alpha_phi > 0.0 && request.ada.gamma > default_ada_gamma(*request.alpha_phi)) {
      trace.warnings.push_back("gamma exceeds 1/(2 alpha_phi) = " + std::to_string(default_ada_gamma(*request.alpha_phi)) +
                               "; the rate guarantee does not apply");
    }
    AdaState state = ada_initial_state(y0);
    for (int t = 1; t <= request.ada.rounds; ++t) {
      trace.records.push_back(ada_round(state, cp, request.ada, net, request.f_star, request.threads));
      if (request.ada.grad_tolerance && trace.records.back().grad_inf <= *request.ada.grad_tolerance) {
        trace.converged = true;
        break;
      }
    }
    trace.final_y = state.y;
    trace.final_y_hat = state.y_hat;
    const Evaluation out = evaluate(cp, state.y_hat, nullptr, {request.threads});
    trace.output = out.primal();
    trace.final_multipliers = out.multipliers;
  } else {
    SlackState y = y0;
    for (int t = 1; t <= request.pgd.rounds; ++t) {
      trace.records.push_back(pgd_round(y, t, cp, request.pgd, net, request.f_star, request.threads));
      if (request.pgd.grad_tolerance && trace.records.back().grad_inf <= *request.pgd.grad_tolerance) {
        trace.converged = true;
        break;
      }
    }
    trace.final_y = y;
    const Evaluation out = evaluate(cp, y, nullptr, {request.threads});
    trace.output = out.primal();
    trace.final_multipliers = out.multipliers;
  }
  return trace;
}

AuditResult locality_audit(const CoupledProblem& cp, const RunRequest& request, std::optional<InjectedFault> fault) {
  SimNetwork network(cp.topology, SimNetwork::Mode::kAudit);
  if (fault) network.inject_fault(*fault);
  AuditResult result;
  result.trace = run(cp, request, &network);
  result.violations = network.violations();
  result.passed = network.clean();
  return result;
}

double estimate_gradient_bound(const CoupledProblem& cp, double box_bound, std::uint64_t seed) {
  const std::size_t n_y = cp.topology.slack_dimension();
  if (n_y == 0) return 0.0;
  std::mt19937_64 rng(seed);
  auto gradient_norm = [&](const Eigen::VectorXd& flat) {
    const Evaluation ev = evaluate(cp, unflatten(cp.topology, flat));
    return std::sqrt(squared_norm(ev.gradient));
  };

  double largest = 0.0;
  const std::size_t corner_bits = std::min<std::size_t>(n_y, 10);
  const std::size_t corners = std::size_t{1} << corner_bits;
  std::bernoulli_distribution coin(0.5);
  for (std::size_t c = 0; c < corners; ++c) {
    Eigen::VectorXd flat(static_cast<Eigen::Index>(n_y));
    for (std::size_t k = 0; k < n_y; ++k) {
      const bool positive = n_y <= 10 ? ((c >> k) & 1U) != 0 : coin(rng);
      flat(static_cast<Eigen::Index>(k)) = positive ? box_bound : -box_bound;
    }
    largest = std::max(largest, gradient_norm(flat));
  }
  std::uniform_real_distribution<double> uniform(-box_bound, box_bound);
  for (int s = 0; s < 50; ++s) {
    Eigen::VectorXd flat(static_cast<Eigen::Index>(n_y));
    for (Eigen::Index k = 0; k < flat.size(); ++k) flat(k) = uniform(rng);
    largest = std::max(largest, gradient_norm(flat));
  }
  // Roundoff-level gradients mean phi is flat in the slack.
  return largest <= 1e-10 ? 0.0 : 2.0 * largest;
}

double default_box_bound(const CoupledProblem& cp, const SlackState& oracle_slack) {
  double scale = max_abs(oracle_slack);
  for (const auto& c : cp.spec.coupling) {
    if (c.ineq_offset.size() > 0) scale = std::max(scale, c.ineq_offset.cwiseAbs().maxCoeff());
    if (c.eq_offset.size() > 0) scale = std::max(scale, c.eq_offset.cwiseAbs().maxCoeff());
  }
  // All-zero data: fall back to a unit scale rather than an empty box.
  return 10.0 * (scale > 0.0 ? scale : 1.0);
}

bool box_inactive(const SlackState& y, double box_bound) { return max_abs(y) < box_bound; }

}  // namespace couplesolve
