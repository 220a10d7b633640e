#include "couplesolve/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "couplesolve/errors.hpp"

namespace couplesolve::qp {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

MatrixXd stack(const Problem& p, const std::vector<int>& eq_ids, const std::vector<int>& working) {
  MatrixXd rows(static_cast<Index>(eq_ids.size() + working.size()), p.dim());
  Index r = 0;
  for (int q : eq_ids) rows.row(r++) = p.eq_rows.row(q);
  for (int j : working) rows.row(r++) = p.ineq_rows.row(j);
  return rows;
}

/// Orthonormal basis of the null space of `rows` (assumed full row rank).
MatrixXd null_basis(const MatrixXd& rows, Index n) {
  const Index k = rows.rows();
  if (k == 0) return MatrixXd::Identity(n, n);
  Eigen::HouseholderQR<MatrixXd> qr(rows.transpose());
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, n);
  return q.rightCols(n - k);
}

struct Step {
  VectorXd p;
  bool ray = false;
  bool singular = false;
};

/// Minimizes the model over x + null(rows). Along zero-curvature directions
/// with a descent component the step is a ray.
Step null_space_step(const Problem& problem, const VectorXd& x, const MatrixXd& rows) {
  const Index n = problem.dim();
  const MatrixXd z = null_basis(rows, n);
  Step step{VectorXd::Zero(n)};
  if (z.cols() == 0) return step;
  const VectorXd g = problem.hessian * x + problem.linear;
  const VectorXd rhs = -(z.transpose() * g);
  const MatrixXd reduced = z.transpose() * problem.hessian * z;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (reduced + reduced.transpose()));
  const double curvature_tol = 1e-10 * std::max(1.0, problem.hessian.cwiseAbs().maxCoeff());
  const VectorXd& values = eig.eigenvalues();
  const MatrixXd& vectors = eig.eigenvectors();

  VectorXd kernel_part = VectorXd::Zero(z.cols());
  VectorXd newton = VectorXd::Zero(z.cols());
  for (Index k = 0; k < values.size(); ++k) {
    const double coeff = vectors.col(k).dot(rhs);
    if (values(k) <= curvature_tol) {
      step.singular = true;
      kernel_part += coeff * vectors.col(k);
    } else {
      newton += (coeff / values(k)) * vectors.col(k);
    }
  }
  if (inf_norm(kernel_part) > 1e-10 * (1.0 + inf_norm(g))) {
    step.ray = true;
    step.p = z * kernel_part;
  } else {
    step.p = z * newton;
  }
  return step;
}

}  // namespace

std::vector<int> independent_rows(const MatrixXd& rows, double relative_tolerance) {
  std::vector<int> chosen;
  if (rows.rows() == 0) return chosen;
  const double scale = std::max(1.0, rows.cwiseAbs().maxCoeff());
  // Gram-Schmidt against the rows kept so far, in order.
  std::vector<VectorXd> basis;
  for (Index r = 0; r < rows.rows(); ++r) {
    VectorXd v = rows.row(r).transpose();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v -= b.dot(v) * b;
    const double norm = v.norm();
    if (norm > relative_tolerance * scale) {
      basis.push_back(v / norm);
      chosen.push_back(static_cast<int>(r));
    }
  }
  return chosen;
}

Result solve_from_feasible(const Problem& problem, const VectorXd& start, std::vector<int> working_set,
                           const Options& options) {
  const auto n_ineq = static_cast<int>(problem.ineq_rows.rows());
  std::vector<int> eq_ids(static_cast<std::size_t>(problem.eq_rows.rows()));
  for (std::size_t q = 0; q < eq_ids.size(); ++q) eq_ids[q] = static_cast<int>(q);
  std::sort(working_set.begin(), working_set.end());
  if (static_cast<Index>(eq_ids.size() + working_set.size()) > problem.dim()) {
    throw SolverError("initial working set has more rows than variables");
  }

  VectorXd x = start;
  std::vector<bool> in_working(static_cast<std::size_t>(n_ineq), false);
  for (int j : working_set) in_working[static_cast<std::size_t>(j)] = true;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const MatrixXd rows = stack(problem, eq_ids, working_set);
    const Step step = null_space_step(problem, x, rows);
    const double step_norm = inf_norm(step.p);

    if (!step.ray && step_norm <= 1e-11 * (1.0 + inf_norm(x))) {
      const VectorXd g = problem.hessian * x + problem.linear;
      VectorXd nu = VectorXd::Zero(rows.rows());
      if (rows.rows() > 0) nu = rows.transpose().householderQr().solve(-g);
      const auto n_eq = static_cast<Index>(eq_ids.size());
      const double drop_tol = 1e-11 * (1.0 + inf_norm(g));
      int drop = -1;
      double most_negative = -drop_tol;
      for (std::size_t w = 0; w < working_set.size(); ++w) {
        const double mu = nu(n_eq + static_cast<Index>(w));
        if (mu < most_negative) {
          most_negative = mu;
          drop = static_cast<int>(w);
        }
      }
      if (drop >= 0) {
        in_working[static_cast<std::size_t>(working_set[static_cast<std::size_t>(drop)])] = false;
        working_set.erase(working_set.begin() + drop);
        continue;
      }
      if (step.singular && options.require_unique) {
        throw SolverError("QP minimizer is not unique: Hessian is singular on the null space of the active rows");
      }
      Result result;
      result.x = x;
      result.iterations = iter;
      result.unique = !step.singular;
      result.eq_multipliers = nu.head(n_eq);
      result.ineq_multipliers = VectorXd::Zero(n_ineq);
      for (std::size_t w = 0; w < working_set.size(); ++w) {
        result.ineq_multipliers(working_set[w]) = std::max(0.0, nu(n_eq + static_cast<Index>(w)));
      }
      result.active_set = working_set;
      return result;
    }

    // Ratio test over rows outside the working set.
    double alpha = step.ray ? std::numeric_limits<double>::infinity() : 1.0;
    int blocking = -1;
    const double p_norm = step.p.norm();
    for (int j = 0; j < n_ineq; ++j) {
      if (in_working[static_cast<std::size_t>(j)]) continue;
      const auto a = problem.ineq_rows.row(j);
      const double ap = a.dot(step.p);
      if (ap <= 1e-14 * a.norm() * p_norm) continue;
      const double slack = a.dot(x) + problem.ineq_offsets(j);
      const double ratio = std::max(0.0, -slack) / ap;
      if (ratio < alpha) {
        alpha = ratio;
        blocking = j;
      }
    }
    if (blocking < 0 && step.ray) throw SolverError("QP is unbounded below along a feasible ray");
    x += alpha * step.p;
    if (blocking >= 0 && (step.ray || alpha < 1.0)) {
      in_working[static_cast<std::size_t>(blocking)] = true;
      working_set.insert(std::upper_bound(working_set.begin(), working_set.end(), blocking), blocking);
    }
  }
  throw SolverError("QP active-set iteration cap (" + std::to_string(options.max_iterations) +
                    ") reached; the problem is likely degenerate");
}

Result solve(const Problem& problem, const Options& options) {
  const Index n = problem.dim();
  const Index m = problem.ineq_rows.rows();

  // Equality rows: keep an independent subset and check consistency.
  const std::vector<int> eq_keep = independent_rows(problem.eq_rows);
  Problem reduced = problem;
  reduced.eq_rows.resize(static_cast<Index>(eq_keep.size()), n);
  reduced.eq_offsets.resize(static_cast<Index>(eq_keep.size()));
  for (std::size_t k = 0; k < eq_keep.size(); ++k) {
    reduced.eq_rows.row(static_cast<Index>(k)) = problem.eq_rows.row(eq_keep[k]);
    reduced.eq_offsets(static_cast<Index>(k)) = problem.eq_offsets(eq_keep[k]);
  }
  VectorXd x0 = VectorXd::Zero(n);
  if (reduced.eq_rows.rows() > 0) {
    x0 = reduced.eq_rows.completeOrthogonalDecomposition().solve(-reduced.eq_offsets);
  }
  if (problem.eq_rows.rows() > 0) {
    const double scale = 1.0 + inf_norm(problem.eq_offsets) + problem.eq_rows.cwiseAbs().maxCoeff() * inf_norm(x0);
    if (inf_norm(problem.eq_rows * x0 + problem.eq_offsets) > 1e-9 * scale) {
      throw SolverError("QP is infeasible: equality rows are inconsistent");
    }
  }

  VectorXd feasible = x0;
  const VectorXd violation0 = m > 0 ? VectorXd(problem.ineq_rows * x0 + problem.ineq_offsets) : VectorXd();
  if (m > 0 && violation0.maxCoeff() > 0.0) {
    // Phase 1: min sum(s) over (x, s) with A x + b - s <= 0, s >= 0.
    Problem phase1;
    phase1.hessian = MatrixXd::Zero(n + m, n + m);
    phase1.linear = VectorXd::Zero(n + m);
    phase1.linear.tail(m).setOnes();
    phase1.ineq_rows = MatrixXd::Zero(2 * m, n + m);
    phase1.ineq_offsets = VectorXd::Zero(2 * m);
    phase1.ineq_rows.topLeftCorner(m, n) = problem.ineq_rows;
    phase1.ineq_rows.block(0, n, m, m) = -MatrixXd::Identity(m, m);
    phase1.ineq_offsets.head(m) = problem.ineq_offsets;
    phase1.ineq_rows.block(m, n, m, m) = -MatrixXd::Identity(m, m);
    phase1.eq_rows = MatrixXd::Zero(reduced.eq_rows.rows(), n + m);
    phase1.eq_rows.leftCols(n) = reduced.eq_rows;
    phase1.eq_offsets = reduced.eq_offsets;

    VectorXd start(n + m);
    start.head(n) = x0;
    std::vector<int> working;
    for (Index j = 0; j < m; ++j) {
      start(n + j) = std::max(0.0, violation0(j));
      working.push_back(static_cast<int>(violation0(j) > 0.0 ? j : m + j));
    }
    Options phase1_options;
    phase1_options.max_iterations = 100 * static_cast<int>(n + 2 * m + 1);
    phase1_options.require_unique = false;
    const Result r1 = solve_from_feasible(phase1, start, working, phase1_options);
    const double total_violation = r1.x.tail(m).sum();
    if (total_violation > 1e-9) {
      throw SolverError("QP is infeasible: minimum total violation " + std::to_string(total_violation));
    }
    feasible = r1.x.head(n);
  }

  // Start with the rows active at the feasible point, kept independent.
  std::vector<int> working;
  if (m > 0) {
    const VectorXd slack = problem.ineq_rows * feasible + problem.ineq_offsets;
    const double tol = 1e-12 * (1.0 + inf_norm(problem.ineq_offsets));
    std::vector<int> candidates;
    for (Index j = 0; j < m; ++j)
      if (slack(j) >= -tol) candidates.push_back(static_cast<int>(j));
    MatrixXd stacked(reduced.eq_rows.rows() + static_cast<Index>(candidates.size()), n);
    stacked.topRows(reduced.eq_rows.rows()) = reduced.eq_rows;
    for (std::size_t k = 0; k < candidates.size(); ++k)
      stacked.row(reduced.eq_rows.rows() + static_cast<Index>(k)) = problem.ineq_rows.row(candidates[k]);
    for (int idx : independent_rows(stacked)) {
      if (idx >= reduced.eq_rows.rows()) {
        working.push_back(candidates[static_cast<std::size_t>(idx - reduced.eq_rows.rows())]);
      }
    }
  }

  Result result = solve_from_feasible(reduced, feasible, working, options);
  VectorXd eq_full = VectorXd::Zero(problem.eq_rows.rows());
  for (std::size_t k = 0; k < eq_keep.size(); ++k) eq_full(eq_keep[k]) = result.eq_multipliers(static_cast<Index>(k));
  result.eq_multipliers = eq_full;
  if (static_cast<Index>(eq_keep.size()) < problem.eq_rows.rows()) result.unique = false;
  return result;
}

}  // namespace couplesolve::qp
