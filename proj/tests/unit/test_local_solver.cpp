#include <doctest.h>

#include <random>

#include "couplesolve/errors.hpp"
#include "couplesolve/local_solver.hpp"
#include "couplesolve/simnet.hpp"
#include "couplesolve/slack_engine.hpp"
#include "instances.hpp"

using namespace couplesolve;

TEST_SUITE("local_solver") {

TEST_CASE("toy agent at zero slack") {
  const CoupledProblem cp = make_coupled_problem(testing::two_agent_toy());
  DirectExchange net(cp.topology);
  const auto views = net.exchange(Phase::kSlackExchange, zero_slack(cp.topology));
  const LocalSubproblem sub = assemble_subproblem(0, views[0], cp.spec, cp.topology, cp.weights);
  CHECK(sub.eq_ids == std::vector<int>{0});
  CHECK(sub.eq_offsets(0) == doctest::Approx(-1.0));
  const KktSolution sol = solve_kkt(sub);
  CHECK(sol.x(0) == doctest::Approx(1.0));
  CHECK(sol.lambda(0) == doctest::Approx(-1.0));
  CHECK(sol.multiplier(sub, 0) == doctest::Approx(-1.0));
  CHECK(verify_kkt(sub, sol).satisfied());
}

TEST_CASE("offset uses the agent's own and its neighbors' slack") {
  const CoupledProblem cp = make_coupled_problem(testing::two_agent_toy());
  DirectExchange net(cp.topology);
  SlackState y = zero_slack(cp.topology);
  y[0] << 2.0, 0.0;
  const auto views = net.exchange(Phase::kSlackExchange, y);
  // beta_1 = 2 - (1/2 * 2 + 1/2 * 0) - 1 = 0
  const LocalSubproblem s0 = assemble_subproblem(0, views[0], cp.spec, cp.topology, cp.weights);
  CHECK(s0.eq_offsets(0) == doctest::Approx(0.0));
  const LocalSubproblem s1 = assemble_subproblem(1, views[1], cp.spec, cp.topology, cp.weights);
  CHECK(s1.eq_offsets(0) == doctest::Approx(-2.0));
}

TEST_CASE("views with missing or extra neighbors are rejected") {
  const CoupledProblem cp = make_coupled_problem(testing::two_agent_toy());
  DirectExchange net(cp.topology);
  auto views = net.exchange(Phase::kSlackExchange, zero_slack(cp.topology));
  AgentView missing = views[0];
  missing[0].agents = {0};
  missing[0].values = {0.0};
  CHECK_THROWS_AS(assemble_subproblem(0, missing, cp.spec, cp.topology, cp.weights), ValidationError);
  AgentView none;
  CHECK_THROWS_AS(assemble_subproblem(0, none, cp.spec, cp.topology, cp.weights), ValidationError);
  CHECK_THROWS_AS(views[0][0].from(5), ValidationError);
}

TEST_CASE("unconstrained agent returns the unconstrained minimizer") {
  LocalSubproblem sub;
  sub.objective = {2.0 * Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(2.0, -4.0), 0.0};
  sub.ineq_rows = Eigen::MatrixXd::Zero(0, 2);
  sub.ineq_offsets = Eigen::VectorXd::Zero(0);
  sub.eq_rows = Eigen::MatrixXd::Zero(0, 2);
  sub.eq_offsets = Eigen::VectorXd::Zero(0);
  const KktSolution sol = solve_kkt(sub);
  CHECK(sol.x(0) == doctest::Approx(-1.0));
  CHECK(sol.x(1) == doctest::Approx(2.0));
}

TEST_CASE("inactive inequality has zero multiplier, active one positive") {
  LocalSubproblem sub;
  sub.objective = {Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Constant(1, -3.0), 0.0};
  sub.ineq_ids = {0, 1};
  sub.ineq_rows = Eigen::MatrixXd::Ones(2, 1);
  sub.ineq_rows(1, 0) = -1.0;
  sub.ineq_offsets = Eigen::Vector2d(-1.0, -5.0);  // x <= 1, x >= -5
  sub.eq_rows = Eigen::MatrixXd::Zero(0, 1);
  sub.eq_offsets = Eigen::VectorXd::Zero(0);
  const KktSolution sol = solve_kkt(sub);
  CHECK(sol.x(0) == doctest::Approx(1.0));
  CHECK(sol.mu(0) == doctest::Approx(2.0));
  CHECK(sol.mu(1) == 0.0);
  CHECK(sol.active_set == std::vector<int>{0});
}

TEST_CASE("flat unconstrained direction is unbounded") {
  LocalSubproblem sub;
  sub.objective = {Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, 1.0), 0.0};
  sub.ineq_rows = Eigen::MatrixXd::Zero(0, 1);
  sub.ineq_offsets = Eigen::VectorXd::Zero(0);
  sub.eq_rows = Eigen::MatrixXd::Zero(0, 1);
  sub.eq_offsets = Eigen::VectorXd::Zero(0);
  CHECK_THROWS_AS(solve_kkt(sub), SolverError);
}

TEST_CASE("flat direction blocked by an inequality is bounded") {
  LocalSubproblem sub;
  sub.objective = {Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, 1.0), 0.0};
  sub.ineq_ids = {0};
  sub.ineq_rows = -Eigen::MatrixXd::Ones(1, 1);
  sub.ineq_offsets = Eigen::VectorXd::Constant(1, -2.0);  // x >= -2
  sub.eq_rows = Eigen::MatrixXd::Zero(0, 1);
  sub.eq_offsets = Eigen::VectorXd::Zero(0);
  const KktSolution sol = solve_kkt(sub);
  CHECK(sol.x(0) == doctest::Approx(-2.0));
  CHECK(sol.mu(0) == doctest::Approx(1.0));
}

TEST_CASE("active-set solve matches subset enumeration") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const LocalSubproblem sub = testing::random_subproblem(rng, 4);
    const KktSolution sol = solve_kkt(sub);
    const testing::BruteForceResult ref = testing::brute_force_qp(sub);
    REQUIRE(ref.found);
    CHECK((sol.x - ref.x).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(verify_kkt(sub, sol).satisfied(1e-9));
  }
}

}  // TEST_SUITE
