#include <doctest.h>

#include <random>

#include "couplesolve/errors.hpp"
#include "couplesolve/graph_topology.hpp"
#include "couplesolve/problem_model.hpp"
#include "instances.hpp"

using namespace couplesolve;

namespace {

ProblemSpec line_problem(int n, const std::vector<int>& members) {
  ProblemSpec p;
  p.graph = Graph::line(n);
  p.m_ineq = 1;
  for (int i = 0; i < n; ++i) {
    p.objectives.push_back({Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), 0.0});
    AgentCoupling c{Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(0, 1), Eigen::VectorXd::Zero(0)};
    p.coupling.push_back(c);
  }
  for (int i : members) p.coupling[static_cast<std::size_t>(i)].ineq_coeffs(0, 0) = 1.0;
  return p;
}

}  // namespace

TEST_SUITE("graph_topology") {

TEST_CASE("graph edges are canonical and deduplicated") {
  const Graph g(3, {{1, 0}, {0, 1}, {2, 1}});
  CHECK(g.edges() == std::vector<Edge>{{0, 1}, {1, 2}});
  CHECK(g.has_edge(1, 0));
  CHECK_FALSE(g.has_edge(0, 2));
  CHECK(g.neighbors(1) == std::vector<int>{0, 2});
  CHECK_THROWS_AS(Graph(2, {{0, 0}}), ValidationError);
  CHECK_THROWS_AS(Graph(2, {{0, 2}}), ValidationError);
}

TEST_CASE("four-agent example induces the listed subgraphs") {
  const ProblemSpec p = testing::four_agent_example();
  const ConstraintTopology t = induce_topology(p, p.graph);
  CHECK(t.participants[0] == std::vector<int>{0, 3});
  CHECK(t.induced_edges[0] == std::vector<Edge>{{0, 3}});
  CHECK(t.participants[1] == std::vector<int>{0, 1, 2});
  CHECK(t.induced_edges[1] == std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}});
  for (const auto& r : check_connectivity(t)) CHECK(r.connected);
  CHECK(t.agent_constraints(0) == std::vector<int>{0, 1});
  CHECK(t.agent_constraints(3) == std::vector<int>{0});
  CHECK(t.local_index(0, 3) == 1);
  CHECK(t.local_index(0, 1) == -1);
  // agent 1 (local 0) in constraint 2 sees everyone
  CHECK(t.neighborhoods[1][0] == std::vector<int>{0, 1, 2});
  CHECK(t.slack_dimension() == 5);
}

TEST_CASE("a zero row with a nonzero offset still participates") {
  ProblemSpec p = line_problem(3, {0, 1});
  p.coupling[2].ineq_offset(0) = 0.5;
  const ConstraintTopology t = induce_topology(p, p.graph);
  CHECK(t.participants[0] == std::vector<int>{0, 1, 2});
}

TEST_CASE("disconnected participants are reported and get no weights") {
  const ProblemSpec p = line_problem(3, {0, 2});
  const ConstraintTopology t = induce_topology(p, p.graph);
  CHECK_FALSE(check_connectivity(t)[0].connected);
  CHECK_THROWS_AS(metropolis_weights(t, 0), ValidationError);
}

TEST_CASE("agent count mismatch is rejected") {
  const ProblemSpec p = line_problem(3, {0, 1});
  CHECK_THROWS_AS(induce_topology(p, Graph::line(4)), ValidationError);
}

TEST_CASE("Metropolis weights on a 4-path are the thirds pattern") {
  const ProblemSpec p = line_problem(4, {0, 1, 2, 3});
  const ConstraintTopology t = induce_topology(p, p.graph);
  const WeightMatrix w = metropolis_weights(t, 0);
  // numerators over 3
  const int expected[4][4] = {{2, 1, 0, 0}, {1, 1, 1, 0}, {0, 1, 1, 1}, {0, 0, 1, 2}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(w.entries(i, j) == doctest::Approx(expected[i][j] / 3.0).epsilon(1e-15));
  CHECK(null_range_check(w));
}

TEST_CASE("single participant carries a 1x1 identity") {
  const ProblemSpec p = line_problem(3, {1});
  const ConstraintTopology t = induce_topology(p, p.graph);
  const WeightMatrix w = metropolis_weights(t, 0);
  CHECK(w.entries.rows() == 1);
  CHECK(w.entries(0, 0) == 1.0);
  CHECK(null_range_check(w));
  CHECK(spectral_norm_of_complement(w) == 0.0);
}

TEST_CASE("validate_weights rejects broken matrices") {
  const ProblemSpec p = line_problem(3, {0, 1, 2});
  const ConstraintTopology t = induce_topology(p, p.graph);
  WeightMatrix w = metropolis_weights(t, 0);
  CHECK_NOTHROW(validate_weights(t, w));

  WeightMatrix asym = w;
  asym.entries(0, 1) += 0.1;
  asym.entries(0, 0) -= 0.1;
  CHECK_THROWS_AS(validate_weights(t, asym), ValidationError);

  WeightMatrix off_pattern = w;  // 1 and 3 are not adjacent
  off_pattern.entries(0, 2) = 0.1;
  off_pattern.entries(2, 0) = 0.1;
  off_pattern.entries(0, 0) -= 0.1;
  off_pattern.entries(2, 2) -= 0.1;
  CHECK_THROWS_AS(validate_weights(t, off_pattern), ValidationError);

  WeightMatrix negative = w;
  negative.entries << 1.5, -0.5, 0, -0.5, 1.0, 0.5, 0, 0.5, 0.5;
  CHECK_THROWS_AS(validate_weights(t, negative), ValidationError);

  WeightMatrix wrong_size = w;
  wrong_size.entries = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(validate_weights(t, wrong_size), ValidationError);
}

TEST_CASE("identity weights fail the null-range check") {
  WeightMatrix w{0, Eigen::MatrixXd::Identity(3, 3)};
  CHECK_FALSE(null_range_check(w));
}

TEST_CASE("Metropolis weights are valid on random instances") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const ProblemSpec p = testing::random_instance(rng);
    const ConstraintTopology t = induce_topology(p, p.graph);
    for (int l = 0; l < t.n_constraints(); ++l) {
      const WeightMatrix w = metropolis_weights(t, l);
      CHECK_NOTHROW(validate_weights(t, w));
      CHECK(null_range_check(w));
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(w.entries.rows());
      CHECK((w.laplacian_like() * ones).lpNorm<Eigen::Infinity>() <= 1e-14);
      const double norm = spectral_norm_of_complement(w);
      CHECK(norm <= 2.0 + 1e-12);
      CHECK((t.size(l) <= 1 || norm > 0.0));
    }
  }
}

}  // TEST_SUITE
