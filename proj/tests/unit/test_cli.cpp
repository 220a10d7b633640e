#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "couplesolve/errors.hpp"
#include "couplesolve/tools/commands.hpp"
#include "couplesolve/tools/io.hpp"
#include "instances.hpp"

using namespace couplesolve;
using namespace couplesolve::io;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "couplesolve_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "couplesolve");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

const char* kToy = R"({"agents":[{"dim":1,"hessian":[[1]]},{"dim":1,"hessian":[[1]]}],
 "eq":[{"agent":1,"row":1,"coeffs":[1],"offset":-1},{"agent":2,"row":1,"coeffs":[1],"offset":-1}],
 "edges":[[1,2]]})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("problem JSON round trip") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const ProblemSpec p = testing::random_instance(rng);
    const ProblemDocument back = parse_problem(json::parse(problem_to_json(p).dump()));
    CHECK(back.spec.graph == p.graph);
    REQUIRE(back.spec.n_agents() == p.n_agents());
    CHECK(back.spec.m_ineq == p.m_ineq);
    CHECK(back.spec.q_eq == p.q_eq);
    for (int i = 0; i < p.n_agents(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      CHECK(back.spec.objectives[k].hessian == p.objectives[k].hessian);
      CHECK(back.spec.objectives[k].linear == p.objectives[k].linear);
      CHECK(back.spec.coupling[k].ineq_coeffs == p.coupling[k].ineq_coeffs);
      CHECK(back.spec.coupling[k].ineq_offset == p.coupling[k].ineq_offset);
      CHECK(back.spec.coupling[k].eq_coeffs == p.coupling[k].eq_coeffs);
      CHECK(back.spec.coupling[k].eq_offset == p.coupling[k].eq_offset);
    }
  }
}

TEST_CASE("problem parsing names the offending key") {
  json doc = json::parse(kToy);
  doc["agents"][0]["hesian"] = 1;
  try {
    parse_problem(doc);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("hesian") != std::string::npos);
  }
  json bad_agent = json::parse(kToy);
  bad_agent["eq"][0]["agent"] = 3;
  CHECK_THROWS_AS(parse_problem(bad_agent), ValidationError);
  json bad_len = json::parse(kToy);
  bad_len["eq"][0]["coeffs"] = {1, 2};
  CHECK_THROWS_AS(parse_problem(bad_len), ValidationError);
}

TEST_CASE("empty trace is header only") {
  std::ostringstream out;
  write_trace(out, 2, {});
  CHECK(out.str() == "round,phi,phi_hat,obj_err,max_ineq_viol,max_eq_resid,dual_cons_err_1,dual_cons_err_2,msgs,grad_inf\n");
}

TEST_CASE("trace CSV round trip is exact") {
  std::mt19937_64 rng(52);
  const CoupledProblem cp = make_coupled_problem(testing::random_instance(rng));
  RunRequest r;
  r.ada.gamma = 0.037;
  r.ada.rounds = 15;
  const RunTrace trace = run(cp, r);
  std::stringstream buf;
  write_trace(buf, trace.n_constraints, trace.records);
  const TraceTable table = parse_trace(buf);
  CHECK(table.n_constraints == trace.n_constraints);
  REQUIRE(table.records.size() == trace.records.size());
  for (std::size_t k = 0; k < table.records.size(); ++k) {
    const auto& a = table.records[k];
    const auto& b = trace.records[k];
    CHECK(a.round == b.round);
    CHECK(same_bits(a.phi, b.phi));
    CHECK(a.phi_hat == b.phi_hat);
    CHECK(std::isnan(a.obj_err));
    CHECK(a.max_ineq_viol == b.max_ineq_viol);
    CHECK(a.max_eq_resid == b.max_eq_resid);
    CHECK(a.dual_cons_err == b.dual_cons_err);
    CHECK(a.msgs == b.msgs);
    CHECK(a.grad_inf == b.grad_inf);
  }
}

TEST_CASE("flags override config file values and unknown keys are rejected") {
  const std::string cfg = write_file("cfg.json", R"({"algorithm":"ada","rounds":7,"gamma":0.5})");
  const char* argv[] = {"couplesolve", "run", "--config", cfg.c_str(), "--rounds", "9", "problem.json"};
  const RunConfig c = parse_config(7, argv);
  CHECK(c.command == Command::kRun);
  CHECK(c.rounds == 9);
  CHECK(*c.gamma == doctest::Approx(0.5));
  CHECK(c.problem_path == "problem.json");

  const char* auto_argv[] = {"couplesolve", "run", "--gamma", "auto", "problem.json"};
  CHECK_FALSE(parse_config(5, auto_argv).gamma.has_value());

  try {
    config_from_json(Command::kRun, json{{"problem", "p.json"}, {"colour", 1}});
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("colour") != std::string::npos);
  }
  CHECK_THROWS_AS(config_from_json(Command::kRun, json{{"problem", "p"}, {"box_bound", 1.0}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(Command::kRun, json{{"problem", "p"}, {"rounds", "many"}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(Command::kRun, json::object()), ValidationError);
  CHECK_THROWS_AS(config_from_json(Command::kCheck, json{{"problem", "p"}, {"rounds", 3}}), ValidationError);

  const RunConfig sim = config_from_json(Command::kCbfSim, json::object());
  CHECK(sim.dt == doctest::Approx(0.01));
  CHECK(sim.inner_iterations == 10);
  CHECK(*sim.gamma == doctest::Approx(0.01));
  CHECK(sim.horizon == doctest::Approx(20.0));
}

TEST_CASE("exit codes") {
  const std::string toy = write_file("toy.json", kToy);
  std::string out;
  CHECK(cli({"check", toy}, &out) == kExitOk);
  CHECK(out.find("check passed") != std::string::npos);
  CHECK(cli({"solve-central", toy}, &out) == kExitOk);
  CHECK(json::parse(out)["f_star"].get<double>() == doctest::Approx(1.0));

  CHECK(cli({"check", (scratch() / "missing.json").string()}) == kExitValidation);
  CHECK(cli({"run", "--rounds", "3", "--frobnicate", toy}) == kExitValidation);
  const std::string malformed = write_file("malformed.json", "{\"agents\": [");
  CHECK(cli({"solve-central", malformed}) == kExitValidation);

  const std::string infeasible = write_file("infeasible.json", R"({"agents":[{"dim":1,"hessian":[[1]]},{"dim":1,"hessian":[[1]]}],
    "eq":[{"agent":1,"row":1,"coeffs":[1],"offset":-1},{"agent":2,"row":1,"coeffs":[1],"offset":-1},
          {"agent":1,"row":2,"coeffs":[1],"offset":0},{"agent":2,"row":2,"coeffs":[1],"offset":0}],
    "edges":[[1,2]]})");
  CHECK(cli({"solve-central", infeasible}) == kExitSolver);

  const std::string disconnected = write_file("disconnected.json", R"({"agents":[{"dim":1,"hessian":[[1]]},{"dim":1,"hessian":[[1]]}],
    "eq":[{"agent":1,"row":1,"coeffs":[1],"offset":-1},{"agent":2,"row":1,"coeffs":[1],"offset":-1}]})");
  CHECK(cli({"check", disconnected}, &out) == kExitValidation);
  CHECK(out.find("DISCONNECTED") != std::string::npos);
  CHECK(cli({"run", "--rounds", "2", disconnected}) == kExitValidation);
}

TEST_CASE("run writes identical outputs for identical configs") {
  std::mt19937_64 rng(53);
  const std::string problem = write_file("random.json", problem_to_json(testing::random_instance(rng)).dump());
  const std::string a = (scratch() / "a.csv").string();
  const std::string b = (scratch() / "b.csv").string();
  const std::string c = (scratch() / "c.csv").string();
  const std::string plot = (scratch() / "a.gp").string();
  REQUIRE(cli({"run", "--algo", "ada", "--rounds", "25", "--gamma", "auto", "--oracle", "--output", a, "--emit-gnuplot", plot,
               problem}) == kExitOk);
  REQUIRE(cli({"run", "--algo", "ada", "--rounds", "25", "--gamma", "auto", "--oracle", "--output", b, problem}) == kExitOk);
  REQUIRE(cli({"run", "--algo", "ada", "--rounds", "25", "--gamma", "auto", "--oracle", "--threads", "4", "--output", c,
               problem}) == kExitOk);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) == slurp(c));
  std::ifstream in(a);
  CHECK(parse_trace(in).records.size() == 26);
  CHECK(slurp(plot).find(a) != std::string::npos);

  const std::string p = (scratch() / "p.csv").string();
  CHECK(cli({"run", "--algo", "pgd", "--rounds", "10", "--output", p, problem}) == kExitOk);
  CHECK(cli({"run", "--algo", "pgd", "--gamma", "0.1", problem}) == kExitValidation);
}

TEST_CASE("ada auto step needs strong convexity") {
  const std::string flat = write_file("flat.json", R"({"agents":[{"dim":2,"hessian":[[1,0],[0,0]]},{"dim":1,"hessian":[[1]]}],
    "eq":[{"agent":1,"row":1,"coeffs":[0,1],"offset":-1},{"agent":2,"row":1,"coeffs":[1],"offset":-1}],
    "edges":[[1,2]]})");
  std::string err;
  CHECK(cli({"run", "--gamma", "auto", flat}, nullptr, &err) == kExitValidation);
  CHECK(err.find("pgd") != std::string::npos);
  CHECK(cli({"run", "--gamma", "0.1", "--rounds", "3", flat}) == kExitOk);
}

TEST_CASE("cbf-sim writes a trajectory") {
  const std::string scenario = write_file("scenario.json", R"({"dt":0.01,"horizon":0.05,"inner_iterations":10,"gamma":0.01,"solver":"distributed"})");
  const std::string out = (scratch() / "traj.csv").string();
  REQUIRE(cli({"cbf-sim", scenario, "--output", out}) == kExitOk);
  const std::string text = slurp(out);
  CHECK(text.rfind("t,z1_x,z1_y", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);
  const std::string bad = write_file("bad_scenario.json", R"({"dt":0.01,"speed":3})");
  CHECK(cli({"cbf-sim", bad}) == kExitValidation);
}

}  // TEST_SUITE
