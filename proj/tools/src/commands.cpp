#include "couplesolve/tools/commands.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "couplesolve/centralized_oracle.hpp"
#include "couplesolve/errors.hpp"
#include "couplesolve/slack_engine.hpp"
#include "couplesolve/tools/io.hpp"

namespace couplesolve::io {

namespace {

CoupledProblem load_coupled(const std::string& path) {
  ProblemDocument doc = load_problem(path);
  if (doc.custom_weights.empty()) return make_coupled_problem(std::move(doc.spec));
  const ConstraintTopology topo = induce_topology(doc.spec, doc.spec.graph);
  for (const auto& report : check_connectivity(topo)) {
    if (!report.connected) {
      throw ValidationError("constraint " + std::to_string(report.constraint + 1) + ": induced subgraph is disconnected");
    }
  }
  WeightSet weights = complete_weights(topo, doc.custom_weights);
  return make_coupled_problem(std::move(doc.spec), std::move(weights));
}

template <typename Writer>
void write_output(const std::string& path, std::ostream& fallback, Writer&& writer) {
  if (path.empty()) {
    writer(fallback);
    return;
  }
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  writer(f);
  if (!f) throw ValidationError("write failed for '" + path + "'");
}

void write_text(const std::string& path, const std::string& text) {
  write_output(path, std::cout, [&](std::ostream& o) { o << text; });
}

std::string join_agents(const std::vector<int>& agents) {
  std::string s = "{";
  for (std::size_t k = 0; k < agents.size(); ++k) s += (k ? "," : "") + std::to_string(agents[k] + 1);
  return s + "}";
}

int do_run(const RunConfig& config, std::ostream& out) {
  const CoupledProblem cp = load_coupled(config.problem_path);
  const double nu = strong_convexity_modulus(cp.spec);

  RunRequest request;
  request.algorithm = config.algorithm;
  request.threads = config.threads;

  std::optional<OracleSolution> oracle;
  if (config.oracle || (config.algorithm == Algorithm::kPgd && !config.box_bound)) {
    oracle = solve_centralized(cp.spec);
    if (config.oracle) request.f_star = oracle->f_star;
  }

  if (config.algorithm == Algorithm::kAda) {
    if (nu <= 0.0) {
      log(LogLevel::kWarn, "objective is not strongly convex (nu = 0); ada has no rate guarantee here, consider --algo pgd");
      if (!config.gamma) throw ValidationError("gamma: 'auto' needs a strongly convex objective; give a number or use --algo pgd");
    } else {
      request.alpha_phi = lipschitz_bound(cp.spec, cp.topology, cp.weights).alpha_phi;
    }
    request.ada.gamma = config.gamma ? *config.gamma : default_ada_gamma(*request.alpha_phi);
    request.ada.rounds = config.rounds;
    request.ada.grad_tolerance = config.grad_tolerance;
    log(LogLevel::kInfo, "ada: gamma = " + format_double(request.ada.gamma));
  } else {
    request.pgd.rounds = config.rounds;
    request.pgd.grad_tolerance = config.grad_tolerance;
    request.pgd.box_bound =
        config.box_bound ? *config.box_bound : default_box_bound(cp, feasible_slack_from_primal(cp, oracle->x_star));
    request.pgd.grad_bound = config.grad_bound ? *config.grad_bound : estimate_gradient_bound(cp, request.pgd.box_bound);
    if (!(request.pgd.grad_bound > 0.0)) request.pgd.grad_bound = 1.0;
    log(LogLevel::kInfo, "pgd: C = " + format_double(request.pgd.box_bound) + ", G = " + format_double(request.pgd.grad_bound));
  }

  const RunTrace trace = run(cp, request);
  for (const auto& w : trace.warnings) log(LogLevel::kWarn, w);
  write_output(config.output_path, out,
               [&](std::ostream& o) { write_trace(o, trace.n_constraints, trace.records); });
  if (!config.gnuplot_path.empty()) {
    write_text(config.gnuplot_path, gnuplot_script(config.output_path, trace.n_constraints, request.f_star.has_value()));
  }
  const RoundRecord& last = trace.records.back();
  log(LogLevel::kInfo, "rounds " + std::to_string(last.round) + ", max ineq violation " +
                           format_double(trace.max_ineq_violation()) + ", max eq residual " +
                           format_double(trace.max_eq_residual()));
  return kExitOk;
}

int do_check(const RunConfig& config, std::ostream& out) {
  const ProblemDocument doc = load_problem(config.problem_path);
  const ConstraintTopology topo = induce_topology(doc.spec, doc.spec.graph);
  bool ok = true;

  for (const auto& r : check_connectivity(topo)) {
    const bool eq = topo.is_equality(r.constraint);
    const int shown = eq ? r.constraint - topo.m_ineq + 1 : r.constraint + 1;
    out << "constraint " << (eq ? "eq " : "ineq ") << shown << ": participants " << join_agents(topo.participants[static_cast<std::size_t>(r.constraint)]) << ' '
        << (r.connected ? "connected" : "DISCONNECTED") << '\n';
    ok = ok && r.connected;
  }
  for (const auto& r : validate_licq(doc.spec, topo)) {
    out << "agent " << r.agent + 1 << ": " << r.rows << " rows, ";
    if (r.rows == 0) {
      out << "no coupling rows\n";
      continue;
    }
    out << (r.full_row_rank ? "full row rank" : "RANK DEFICIENT") << ", sigma_min " << format_double(r.sigma_min) << '\n';
    ok = ok && r.full_row_rank;
  }
  if (ok) {
    for (const auto& w : doc.custom_weights) {
      std::string problem;
      try {
        validate_weights(topo, w);
        if (!null_range_check(w)) problem = "Null(I - P) is larger than span(1)";
      } catch (const ValidationError& e) {
        problem = e.what();
      }
      const bool valid = problem.empty();
      out << "weights " << w.constraint + 1 << ": " << (valid ? "valid" : "INVALID, " + problem) << '\n';
      ok = ok && valid;
    }
  }
  const double nu = strong_convexity_modulus(doc.spec);
  out << "strong convexity modulus: " << format_double(nu) << '\n';
  if (ok && nu > 0.0) {
    const WeightSet weights = complete_weights(topo, doc.custom_weights);
    out << "alpha_phi: " << format_double(lipschitz_bound(doc.spec, topo, weights).alpha_phi) << '\n';
  }
  out << (ok ? "check passed" : "check failed") << '\n';
  return ok ? kExitOk : kExitValidation;
}

int do_solve_central(const RunConfig& config, std::ostream& out) {
  const ProblemDocument doc = load_problem(config.problem_path);
  const OracleSolution sol = solve_centralized(doc.spec);
  write_output(config.output_path, out, [&](std::ostream& o) { o << oracle_to_json(sol).dump(2) << '\n'; });
  return kExitOk;
}

int do_cbf_sim(const RunConfig& config, std::ostream& out) {
  cbf::CbfScenario scenario = cbf::CbfScenario::seven_agent_line();
  scenario.dt = config.dt;
  scenario.inner_iterations = config.inner_iterations;
  scenario.auto_gamma = !config.gamma.has_value();
  if (config.gamma) scenario.inner_gamma = *config.gamma;
  scenario.warm_start = config.warm_start;
  const cbf::ClosedLoopResult result = cbf::run_closed_loop(scenario, config.horizon, config.solver);
  write_output(config.output_path, out, [&](std::ostream& o) { write_trajectory(o, result); });
  if (!config.gnuplot_path.empty()) {
    write_text(config.gnuplot_path,
               gnuplot_trajectory_script(config.output_path, static_cast<int>(scenario.initial.positions.size())));
  }
  std::ostringstream summary;
  summary << "final max pairwise distance " << format_double(result.max_pairwise_distance()) << ", barriers";
  for (double g : result.final_barrier_values) summary << ' ' << format_double(g);
  log(LogLevel::kInfo, summary.str());
  return kExitOk;
}

}  // namespace

int execute(const RunConfig& config, std::ostream& out) {
  switch (config.command) {
    case Command::kRun: return do_run(config, out);
    case Command::kCheck: return do_check(config, out);
    case Command::kSolveCentral: return do_solve_central(config, out);
    case Command::kCbfSim: return do_cbf_sim(config, out);
  }
  return kExitValidation;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return execute(parse_config(argc, argv), out);
  } catch (const HelpRequested& h) {
    out << h.text;
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "couplesolve: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    err << "couplesolve: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "couplesolve: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace couplesolve::io
