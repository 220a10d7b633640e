#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "couplesolve/algorithms.hpp"
#include "couplesolve/cbf_sim.hpp"

namespace couplesolve::io {

enum class Command { kRun, kCheck, kSolveCentral, kCbfSim };

const char* command_name(Command command);

struct RunConfig {
  Command command = Command::kRun;
  std::string problem_path;

  Algorithm algorithm = Algorithm::kAda;
  int rounds = 100;
  std::optional<double> gamma;  // empty means 1/(2 alpha_phi)
  std::optional<double> box_bound;
  std::optional<double> grad_bound;
  std::optional<double> grad_tolerance;
  bool oracle = false;
  int threads = 1;

  double dt = 0.01;
  double horizon = 20.0;
  int inner_iterations = 10;
  cbf::QpSolver solver = cbf::QpSolver::kDistributed;
  bool warm_start = false;

  std::string output_path;   // empty means stdout
  std::string gnuplot_path;  // empty means none
};

/// Builds a config from a flat JSON object whose keys are the long option
/// names with underscores. Keys that the command does not accept are
/// rejected; errors name the offending key.
RunConfig config_from_json(Command command, const nlohmann::json& values);

/// Thrown for --help; carries the text to print.
struct HelpRequested {
  std::string text;
};

/// Parses `couplesolve <command> [options] [file]`. Values given on the
/// command line override those read from --config (for cbf-sim the
/// positional file is the scenario and plays the same role).
RunConfig parse_config(int argc, const char* const* argv);

enum class LogLevel { kQuiet = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

/// From COUPLESOLVE_LOG (quiet, warn, info, debug); warn when unset.
LogLevel log_level();
void log(LogLevel level, const std::string& message);

}  // namespace couplesolve::io
