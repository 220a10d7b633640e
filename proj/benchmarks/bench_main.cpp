#include <random>

#include <benchmark/benchmark.h>

#include "couplesolve/algorithms.hpp"
#include "couplesolve/cbf_sim.hpp"
#include "couplesolve/centralized_oracle.hpp"
#include "couplesolve/qp.hpp"

using namespace couplesolve;

namespace {

// Resource sharing on a line: min sum 1/2 ||x_i - a_i||^2, sum_i 1'x_i <= n, sum_i x_i(0) = 0.
ProblemSpec resource_line(int n, int dim) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  ProblemSpec p;
  p.graph = Graph::line(n);
  p.m_ineq = 1;
  p.q_eq = 1;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd a(dim);
    for (int k = 0; k < dim; ++k) a(k) = 2.0 + normal(rng);
    p.objectives.push_back({Eigen::MatrixXd::Identity(dim, dim), -a, 0.5 * a.squaredNorm()});
    AgentCoupling c;
    c.ineq_coeffs = Eigen::MatrixXd::Ones(1, dim);
    c.ineq_offset = Eigen::VectorXd::Constant(1, -1.0);
    c.eq_coeffs = Eigen::MatrixXd::Zero(1, dim);
    c.eq_coeffs(0, 0) = 1.0;
    c.eq_offset = Eigen::VectorXd::Zero(1);
    p.coupling.push_back(c);
  }
  return p;
}

void BM_Evaluate(benchmark::State& state) {
  const CoupledProblem cp = make_coupled_problem(resource_line(static_cast<int>(state.range(0)), 4));
  const SlackState y = zero_slack(cp.topology);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(cp, y).phi);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Evaluate)->RangeMultiplier(4)->Range(4, 256)->Complexity();

void BM_AdaRounds(benchmark::State& state) {
  const CoupledProblem cp = make_coupled_problem(resource_line(static_cast<int>(state.range(0)), 4));
  RunRequest r;
  r.algorithm = Algorithm::kAda;
  r.ada.gamma = default_ada_gamma(lipschitz_bound(cp.spec, cp.topology, cp.weights).alpha_phi);
  r.ada.rounds = 50;
  for (auto _ : state) benchmark::DoNotOptimize(run(cp, r).records.size());
}
BENCHMARK(BM_AdaRounds)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_AdaRoundsThreaded(benchmark::State& state) {
  const CoupledProblem cp = make_coupled_problem(resource_line(256, 8));
  RunRequest r;
  r.algorithm = Algorithm::kAda;
  r.ada.gamma = default_ada_gamma(lipschitz_bound(cp.spec, cp.topology, cp.weights).alpha_phi);
  r.ada.rounds = 20;
  r.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run(cp, r).records.size());
}
BENCHMARK(BM_AdaRoundsThreaded)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_CentralizedOracle(benchmark::State& state) {
  const ProblemSpec p = resource_line(static_cast<int>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(solve_centralized(p).f_star);
}
BENCHMARK(BM_CentralizedOracle)->Arg(8)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_LocalQp(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return normal(rng); });
  qp::Problem p;
  p.hessian = m * m.transpose() + Eigen::MatrixXd::Identity(d, d);
  p.linear = Eigen::VectorXd::NullaryExpr(d, [&] { return 3.0 * normal(rng); });
  p.ineq_rows = Eigen::MatrixXd::NullaryExpr(4, d, [&] { return normal(rng); });
  p.ineq_offsets = Eigen::VectorXd::Constant(4, -0.5);
  p.eq_rows = Eigen::MatrixXd::Zero(0, d);
  p.eq_offsets = Eigen::VectorXd::Zero(0);
  for (auto _ : state) benchmark::DoNotOptimize(qp::solve(p).x.data());
}
BENCHMARK(BM_LocalQp)->Arg(4)->Arg(16)->Arg(64);

void BM_CbfDistributedStep(benchmark::State& state) {
  const cbf::CbfScenario sc = cbf::CbfScenario::seven_agent_line();
  for (auto _ : state) benchmark::DoNotOptimize(cbf::run_closed_loop(sc, sc.dt, cbf::QpSolver::kDistributed).final_state.time);
}
BENCHMARK(BM_CbfDistributedStep)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
