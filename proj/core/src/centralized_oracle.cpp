#include "couplesolve/centralized_oracle.hpp"

#include <cmath>
#include <limits>

#include "couplesolve/errors.hpp"
#include "couplesolve/qp.hpp"

namespace couplesolve {

OracleSolution solve_centralized(const ProblemSpec& problem) {
  problem.validate();
  const int total = problem.total_dim();
  qp::Problem stacked;
  stacked.hessian = Eigen::MatrixXd::Zero(total, total);
  stacked.linear = Eigen::VectorXd::Zero(total);
  stacked.ineq_rows = Eigen::MatrixXd::Zero(problem.m_ineq, total);
  stacked.ineq_offsets = Eigen::VectorXd::Zero(problem.m_ineq);
  stacked.eq_rows = Eigen::MatrixXd::Zero(problem.q_eq, total);
  stacked.eq_offsets = Eigen::VectorXd::Zero(problem.q_eq);
  int at = 0;
  for (int i = 0; i < problem.n_agents(); ++i) {
    const auto& f = problem.objectives[static_cast<std::size_t>(i)];
    const auto& c = problem.coupling[static_cast<std::size_t>(i)];
    const int d = f.dim();
    stacked.hessian.block(at, at, d, d) = f.hessian;
    stacked.linear.segment(at, d) = f.linear;
    stacked.ineq_rows.middleCols(at, d) = c.ineq_coeffs;
    stacked.eq_rows.middleCols(at, d) = c.eq_coeffs;
    stacked.ineq_offsets += c.ineq_offset;
    stacked.eq_offsets += c.eq_offset;
    at += d;
  }

  qp::Options options;
  options.max_iterations = 100 * (total + problem.m_ineq + problem.q_eq + 1);
  options.require_unique = false;
  const qp::Result r = qp::solve(stacked, options);

  OracleSolution sol;
  at = 0;
  for (const auto& f : problem.objectives) {
    sol.x_star.push_back(r.x.segment(at, f.dim()));
    at += f.dim();
  }
  sol.f_star = objective_value(problem, sol.x_star);
  sol.ineq_multipliers = r.ineq_multipliers;
  sol.eq_multipliers = r.eq_multipliers;
  sol.active_set = r.active_set;
  sol.unique = r.unique;
  return sol;
}

double duality_gap(const ProblemSpec& problem, const Primal& x, const Eigen::VectorXd& ineq_multipliers,
                   const Eigen::VectorXd& eq_multipliers) {
  if (ineq_multipliers.size() != problem.m_ineq || eq_multipliers.size() != problem.q_eq) {
    throw ValidationError("duality gap: multiplier dimensions do not match the problem");
  }
  double dual = 0.0;
  for (int i = 0; i < problem.n_agents(); ++i) {
    const auto& f = problem.objectives[static_cast<std::size_t>(i)];
    const auto& c = problem.coupling[static_cast<std::size_t>(i)];
    const Eigen::VectorXd w =
        f.linear + c.ineq_coeffs.transpose() * ineq_multipliers + c.eq_coeffs.transpose() * eq_multipliers;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.hessian);
    const double tol = 1e-10 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    double inner = 0.0;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      const double proj = eig.eigenvectors().col(k).dot(w);
      if (eig.eigenvalues()(k) > tol) {
        inner -= 0.5 * proj * proj / eig.eigenvalues()(k);
      } else if (std::abs(proj) > 1e-10 * (1.0 + w.norm())) {
        return std::numeric_limits<double>::infinity();
      }
    }
    dual += inner + f.constant + ineq_multipliers.dot(c.ineq_offset) + eq_multipliers.dot(c.eq_offset);
  }
  return objective_value(problem, x) - dual;
}

}  // namespace couplesolve
