#include "couplesolve/local_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "couplesolve/errors.hpp"
#include "couplesolve/qp.hpp"

namespace couplesolve {

double NeighborValues::from(int agent) const {
  auto it = std::lower_bound(agents.begin(), agents.end(), agent);
  if (it == agents.end() || *it != agent) {
    throw ValidationError("constraint " + std::to_string(constraint + 1) + ": no value received from agent " +
                          std::to_string(agent + 1));
  }
  return values[static_cast<std::size_t>(it - agents.begin())];
}

double KktSolution::multiplier(const LocalSubproblem& sub, int l) const {
  for (std::size_t k = 0; k < sub.ineq_ids.size(); ++k)
    if (sub.ineq_ids[k] == l) return mu(static_cast<Eigen::Index>(k));
  for (std::size_t k = 0; k < sub.eq_ids.size(); ++k)
    if (sub.eq_ids[k] == l) return lambda(static_cast<Eigen::Index>(k));
  throw ValidationError("agent " + std::to_string(sub.agent + 1) + " has no multiplier for constraint " +
                        std::to_string(l + 1));
}

LocalSubproblem assemble_subproblem(int agent, const AgentView& view, const ProblemSpec& problem,
                                    const ConstraintTopology& topology, const WeightSet& weights) {
  const auto constraints = topology.agent_constraints(agent);
  if (view.size() != constraints.size()) {
    throw ValidationError("agent " + std::to_string(agent + 1) + ": expected slack values for " +
                          std::to_string(constraints.size()) + " constraints, got " + std::to_string(view.size()));
  }
  LocalSubproblem sub;
  sub.agent = agent;
  sub.objective = problem.objectives[static_cast<std::size_t>(agent)];
  const int d = sub.objective.dim();
  const auto n_ineq = static_cast<Eigen::Index>(topology.agent_ineq_sets[static_cast<std::size_t>(agent)].size());
  const auto n_eq = static_cast<Eigen::Index>(constraints.size()) - n_ineq;
  sub.ineq_rows.resize(n_ineq, d);
  sub.ineq_offsets.resize(n_ineq);
  sub.eq_rows.resize(n_eq, d);
  sub.eq_offsets.resize(n_eq);

  for (std::size_t c = 0; c < constraints.size(); ++c) {
    const int l = constraints[c];
    const NeighborValues& received = view[c];
    const int k = topology.local_index(l, agent);
    const auto& hood = topology.neighborhoods[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
    const auto& members = topology.participants[static_cast<std::size_t>(l)];
    if (received.constraint != l || received.agents.size() != hood.size()) {
      throw ValidationError("agent " + std::to_string(agent + 1) + ": slack values for constraint " +
                            std::to_string(l + 1) + " do not match its neighborhood");
    }
    const auto& p = weights[static_cast<std::size_t>(l)].entries;
    double mixed = 0.0;
    for (int j : hood) mixed += p(k, j) * received.from(members[static_cast<std::size_t>(j)]);
    const double offset = received.from(agent) - mixed + problem.offset(agent, l);

    if (l < problem.m_ineq) {
      const auto r = static_cast<Eigen::Index>(sub.ineq_ids.size());
      sub.ineq_ids.push_back(l);
      sub.ineq_rows.row(r) = problem.row(agent, l);
      sub.ineq_offsets(r) = offset;
    } else {
      const auto r = static_cast<Eigen::Index>(sub.eq_ids.size());
      sub.eq_ids.push_back(l);
      sub.eq_rows.row(r) = problem.row(agent, l);
      sub.eq_offsets(r) = offset;
    }
  }
  return sub;
}

KktSolution solve_kkt(const LocalSubproblem& sub) {
  qp::Problem p{sub.objective.hessian, sub.objective.linear, sub.ineq_rows, sub.ineq_offsets, sub.eq_rows,
                sub.eq_offsets};
  const Eigen::Index n_ineq = sub.ineq_rows.rows();
  const Eigen::Index rows = n_ineq + sub.eq_rows.rows();
  const Eigen::Index d = sub.objective.dim();

  // With full row rank, setting every row to equality is feasible.
  Eigen::VectorXd start = Eigen::VectorXd::Zero(d);
  bool independent = rows <= d;
  if (rows > 0 && independent) {
    Eigen::MatrixXd all(rows, d);
    all << sub.ineq_rows, sub.eq_rows;
    Eigen::VectorXd rhs(rows);
    rhs << -sub.ineq_offsets, -sub.eq_offsets;
    const auto cod = all.completeOrthogonalDecomposition();
    independent = cod.rank() == rows;
    start = cod.solve(rhs);
  }
  std::vector<int> working(static_cast<std::size_t>(n_ineq));
  for (std::size_t j = 0; j < working.size(); ++j) working[j] = static_cast<int>(j);

  qp::Options options;
  options.max_iterations = 100 * std::max<int>(1, static_cast<int>(n_ineq));
  options.require_unique = true;
  qp::Result r;
  try {
    // Dependent rows: no all-active start, use the general solver.
    r = independent ? qp::solve_from_feasible(p, start, std::move(working), options) : qp::solve(p, options);
  } catch (const SolverError& e) {
    throw SolverError("agent " + std::to_string(sub.agent + 1) + ": " + e.what());
  }

  KktSolution sol;
  sol.x = r.x;
  sol.mu = r.ineq_multipliers;
  sol.lambda = r.eq_multipliers;
  sol.iterations = r.iterations;
  for (int j : r.active_set) sol.active_set.push_back(sub.ineq_ids[static_cast<std::size_t>(j)]);
  return sol;
}

KktResiduals verify_kkt(const LocalSubproblem& sub, const KktSolution& sol) {
  KktResiduals res;
  Eigen::VectorXd stationary = sub.objective.gradient(sol.x);
  if (sub.ineq_rows.rows() > 0) stationary += sub.ineq_rows.transpose() * sol.mu;
  if (sub.eq_rows.rows() > 0) stationary += sub.eq_rows.transpose() * sol.lambda;
  res.stationarity = stationary.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < sub.ineq_rows.rows(); ++k) {
    const double slack = sub.ineq_rows.row(k).dot(sol.x) + sub.ineq_offsets(k);
    res.primal_ineq = std::max(res.primal_ineq, slack);
    res.dual = std::max(res.dual, -sol.mu(k));
    res.complementarity = std::max(res.complementarity, std::abs(sol.mu(k) * slack));
  }
  for (Eigen::Index k = 0; k < sub.eq_rows.rows(); ++k) {
    res.primal_eq = std::max(res.primal_eq, std::abs(sub.eq_rows.row(k).dot(sol.x) + sub.eq_offsets(k)));
  }
  return res;
}

}  // namespace couplesolve
