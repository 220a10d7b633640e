#include "couplesolve/tools/config.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <set>
#include <vector>

#include <CLI11.hpp>

#include "couplesolve/errors.hpp"
#include "couplesolve/tools/io.hpp"

namespace couplesolve::io {

namespace {

enum class Kind { kInt, kNumber, kNumberOrAuto, kString, kBool };

struct Key {
  const char* name;
  const char* flag;
  Kind kind;
  const char* help;
};

const std::vector<Key>& keys_for(Command command) {
  static const std::vector<Key> run = {
      {"problem", "", Kind::kString, "problem JSON"},
      {"algorithm", "--algo", Kind::kString, "ada or pgd"},
      {"rounds", "--rounds", Kind::kInt, "number of rounds"},
      {"gamma", "--gamma", Kind::kNumberOrAuto, "ada base step, or 'auto' for 1/(2 alpha_phi)"},
      {"box_bound", "--box-bound", Kind::kNumber, "pgd box bound C (default: from the oracle slack)"},
      {"grad_bound", "--grad-bound", Kind::kNumber, "pgd gradient bound G (default: sampled, doubled)"},
      {"grad_tolerance", "--grad-tol", Kind::kNumber, "stop when ||grad phi||_inf drops to this"},
      {"oracle", "--oracle", Kind::kBool, "solve centrally and report objective error"},
      {"threads", "--threads", Kind::kInt, "parallel agent solves per round"},
      {"output", "--output", Kind::kString, "trace CSV path (default stdout)"},
      {"emit_gnuplot", "--emit-gnuplot", Kind::kString, "write a gnuplot script for the trace"},
  };
  static const std::vector<Key> check = {{"problem", "", Kind::kString, "problem JSON"}};
  static const std::vector<Key> central = {
      {"problem", "", Kind::kString, "problem JSON"},
      {"output", "--output", Kind::kString, "result JSON path (default stdout)"},
  };
  static const std::vector<Key> cbf = {
      {"dt", "--dt", Kind::kNumber, "sampling period"},
      {"horizon", "--horizon", Kind::kNumber, "simulated seconds"},
      {"inner_iterations", "--inner", Kind::kInt, "distributed rounds per sampling step"},
      {"gamma", "--gamma", Kind::kNumberOrAuto, "inner ada base step, or 'auto'"},
      {"solver", "--solver", Kind::kString, "distributed or centralized"},
      {"warm_start", "--warm-start", Kind::kBool, "carry the slack between sampling steps"},
      {"output", "--output", Kind::kString, "trajectory CSV path (default stdout)"},
      {"emit_gnuplot", "--emit-gnuplot", Kind::kString, "write a gnuplot script for the trajectory"},
  };
  switch (command) {
    case Command::kRun: return run;
    case Command::kCheck: return check;
    case Command::kSolveCentral: return central;
    case Command::kCbfSim: return cbf;
  }
  return run;
}

double as_number(const nlohmann::json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (!s.empty() && end == s.c_str() + s.size()) return d;
  }
  throw ValidationError(key + ": expected a number");
}

int as_int(const nlohmann::json& v, const std::string& key) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    char* end = nullptr;
    const long n = std::strtol(s.c_str(), &end, 10);
    if (!s.empty() && end == s.c_str() + s.size()) return static_cast<int>(n);
  }
  throw ValidationError(key + ": expected an integer");
}

bool as_bool(const nlohmann::json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  throw ValidationError(key + ": expected true or false");
}

std::string as_string(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  throw ValidationError(key + ": expected a string");
}

}  // namespace

const char* command_name(Command command) {
  switch (command) {
    case Command::kRun: return "run";
    case Command::kCheck: return "check";
    case Command::kSolveCentral: return "solve-central";
    case Command::kCbfSim: return "cbf-sim";
  }
  return "";
}

RunConfig config_from_json(Command command, const nlohmann::json& values) {
  if (!values.is_object()) throw ValidationError("config: expected a JSON object");
  std::set<std::string> allowed;
  for (const auto& k : keys_for(command)) allowed.insert(k.name);
  for (const auto& [key, value] : values.items()) {
    if (!allowed.contains(key)) {
      throw ValidationError(std::string("unknown key '") + key + "' for command " + command_name(command));
    }
  }

  RunConfig c;
  c.command = command;
  auto has = [&](const char* key) { return values.contains(key) && !values.at(key).is_null(); };

  if (has("problem")) c.problem_path = as_string(values.at("problem"), "problem");
  if (command != Command::kCbfSim && c.problem_path.empty()) throw ValidationError("problem: a problem file is required");

  if (has("algorithm")) {
    const std::string a = as_string(values.at("algorithm"), "algorithm");
    if (a == "ada") c.algorithm = Algorithm::kAda;
    else if (a == "pgd") c.algorithm = Algorithm::kPgd;
    else throw ValidationError("algorithm: expected 'ada' or 'pgd', got '" + a + "'");
  }
  if (has("rounds")) {
    c.rounds = as_int(values.at("rounds"), "rounds");
    if (c.rounds < 0) throw ValidationError("rounds: must be nonnegative");
  }
  if (has("gamma")) {
    const auto& g = values.at("gamma");
    if (!(g.is_string() && g.get<std::string>() == "auto")) {
      c.gamma = as_number(g, "gamma");
      if (!(*c.gamma > 0.0)) throw ValidationError("gamma: must be positive");
    }
  } else if (command == Command::kCbfSim) {
    c.gamma = 0.01;
  }
  if (has("box_bound")) {
    c.box_bound = as_number(values.at("box_bound"), "box_bound");
    if (!(*c.box_bound > 0.0)) throw ValidationError("box_bound: must be positive");
  }
  if (has("grad_bound")) {
    c.grad_bound = as_number(values.at("grad_bound"), "grad_bound");
    if (!(*c.grad_bound > 0.0)) throw ValidationError("grad_bound: must be positive");
  }
  if (has("grad_tolerance")) c.grad_tolerance = as_number(values.at("grad_tolerance"), "grad_tolerance");
  if (has("oracle")) c.oracle = as_bool(values.at("oracle"), "oracle");
  if (has("threads")) {
    c.threads = as_int(values.at("threads"), "threads");
    if (c.threads < 1) throw ValidationError("threads: must be at least 1");
  }
  if (command == Command::kRun) {
    if (c.algorithm == Algorithm::kAda && (c.box_bound || c.grad_bound)) {
      throw ValidationError(std::string(c.box_bound ? "box_bound" : "grad_bound") + ": only valid with algorithm pgd");
    }
    if (c.algorithm == Algorithm::kPgd && has("gamma")) throw ValidationError("gamma: only valid with algorithm ada");
  }

  if (has("dt")) {
    c.dt = as_number(values.at("dt"), "dt");
    if (!(c.dt > 0.0)) throw ValidationError("dt: must be positive");
  }
  if (has("horizon")) {
    c.horizon = as_number(values.at("horizon"), "horizon");
    if (c.horizon < 0.0) throw ValidationError("horizon: must be nonnegative");
  }
  if (has("inner_iterations")) {
    c.inner_iterations = as_int(values.at("inner_iterations"), "inner_iterations");
    if (c.inner_iterations < 1) throw ValidationError("inner_iterations: must be at least 1");
  }
  if (has("solver")) {
    const std::string s = as_string(values.at("solver"), "solver");
    if (s == "distributed") c.solver = cbf::QpSolver::kDistributed;
    else if (s == "centralized") c.solver = cbf::QpSolver::kCentralized;
    else throw ValidationError("solver: expected 'distributed' or 'centralized', got '" + s + "'");
  }
  if (has("warm_start")) c.warm_start = as_bool(values.at("warm_start"), "warm_start");

  if (has("output")) c.output_path = as_string(values.at("output"), "output");
  if (has("emit_gnuplot")) c.gnuplot_path = as_string(values.at("emit_gnuplot"), "emit_gnuplot");
  if (!c.gnuplot_path.empty() && c.output_path.empty()) {
    throw ValidationError("emit_gnuplot: requires output so the script can reference the CSV");
  }
  return c;
}

RunConfig parse_config(int argc, const char* const* argv) {
  CLI::App app{"Distributed solver for QPs with coupled constraints", "couplesolve"};
  app.require_subcommand(1);

  struct Bound {
    CLI::App* sub;
    Command command;
    std::string config_path;
    std::string positional;
    std::map<std::string, std::string> text;
    std::map<std::string, bool> flags;
    std::map<std::string, CLI::Option*> options;
  };
  std::vector<std::unique_ptr<Bound>> bound;

  const std::vector<std::pair<Command, const char*>> commands = {
      {Command::kRun, "run a distributed algorithm and write its trace"},
      {Command::kCheck, "report connectivity, rank and weight diagnostics"},
      {Command::kSolveCentral, "solve the stacked problem centrally"},
      {Command::kCbfSim, "closed-loop multi-agent barrier-function simulation"},
  };
  for (const auto& [command, description] : commands) {
    auto b = std::make_unique<Bound>();
    b->command = command;
    b->sub = app.add_subcommand(command_name(command), description);
    b->sub->add_option("--config", b->config_path, "JSON file with option values")->check(CLI::ExistingFile);
    if (command == Command::kCbfSim) {
      b->sub->add_option("scenario", b->positional, "scenario JSON");
    } else {
      b->sub->add_option("problem", b->positional, "problem JSON");
    }
    for (const auto& k : keys_for(command)) {
      if (std::string(k.flag).empty()) continue;
      if (k.kind == Kind::kBool) {
        b->options[k.name] = b->sub->add_flag(k.flag, b->flags[k.name], k.help);
      } else {
        b->options[k.name] = b->sub->add_option(k.flag, b->text[k.name], k.help);
      }
    }
    bound.push_back(std::move(b));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw ValidationError(e.what());
  }

  for (const auto& b : bound) {
    if (!b->sub->parsed()) continue;
    nlohmann::json values = nlohmann::json::object();
    std::string file = b->config_path;
    if (b->command == Command::kCbfSim && !b->positional.empty()) {
      if (!file.empty()) throw ValidationError("cbf-sim: give either a scenario file or --config, not both");
      file = b->positional;
    }
    if (!file.empty()) {
      values = read_json_file(file);
      if (!values.is_object()) throw ValidationError(file + ": expected a JSON object");
    }
    if (b->command != Command::kCbfSim && !b->positional.empty()) values["problem"] = b->positional;
    for (const auto& k : keys_for(b->command)) {
      auto it = b->options.find(k.name);
      if (it == b->options.end() || it->second->count() == 0) continue;
      if (k.kind == Kind::kBool) {
        values[k.name] = b->flags[k.name];
      } else {
        values[k.name] = b->text[k.name];
      }
    }
    return config_from_json(b->command, values);
  }
  throw ValidationError("no command given");
}

LogLevel log_level() {
  const char* env = std::getenv("COUPLESOLVE_LOG");
  if (env == nullptr) return LogLevel::kWarn;
  const std::string v(env);
  if (v == "quiet" || v == "0") return LogLevel::kQuiet;
  if (v == "info" || v == "2") return LogLevel::kInfo;
  if (v == "debug" || v == "3") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

void log(LogLevel level, const std::string& message) {
  if (level == LogLevel::kQuiet || static_cast<int>(level) > static_cast<int>(log_level())) return;
  static const char* names[] = {"", "warning", "info", "debug"};
  std::cerr << "couplesolve: " << names[static_cast<int>(level)] << ": " << message << '\n';
}

}  // namespace couplesolve::io
