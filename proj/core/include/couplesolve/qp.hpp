#pragma once

#include <vector>

#include <Eigen/Dense>

namespace couplesolve::qp {

/// min 1/2 x'Hx + c'x  s.t.  A_in x + b_in <= 0,  A_eq x + b_eq = 0.
struct Problem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  Eigen::MatrixXd ineq_rows;
  Eigen::VectorXd ineq_offsets;
  Eigen::MatrixXd eq_rows;
  Eigen::VectorXd eq_offsets;

  Eigen::Index dim() const { return linear.size(); }
};

struct Options {
  int max_iterations = 100;
  /// Reject a final working set whose reduced Hessian is singular instead of
  /// returning one of several minimizers.
  bool require_unique = true;
};

struct Result {
  Eigen::VectorXd x;
  /// One per inequality row; zero off the active set.
  Eigen::VectorXd ineq_multipliers;
  /// One per equality row. Rows dropped as linearly dependent get zero.
  Eigen::VectorXd eq_multipliers;
  /// Inequality rows in the final working set, ascending.
  std::vector<int> active_set;
  int iterations = 0;
  /// False when the equality rows were linearly dependent or the final
  /// reduced Hessian was singular, so (x, multipliers) are one choice of many.
  bool unique = true;
};

/// Primal active-set method started from a point feasible for every row.
///
/// `start` must satisfy all equality rows and all inequality rows.
/// `working_set` lists inequality rows treated as equalities at the start;
/// it must be linearly independent together with the equality rows.
/// Each iteration solves the equality-constrained subproblem on the working
/// set in the null space of its rows. A zero step with a negative multiplier
/// drops the most negative one (lowest index on ties); a nonzero step is cut
/// at the first blocking row (lowest index on ties), which joins the working
/// set. Along directions of zero curvature the step becomes a ray and an
/// unblocked ray means the problem is unbounded.
///
/// Throws SolverError on unboundedness, on the iteration cap, or (with
/// require_unique) when the minimizer is not unique.
Result solve_from_feasible(const Problem& problem, const Eigen::VectorXd& start, std::vector<int> working_set,
                           const Options& options = {});

/// Full QP solve: picks a linearly independent subset of the equality rows
/// (SolverError if the system is inconsistent), finds a feasible point by
/// minimizing the sum of inequality violations, then runs
/// solve_from_feasible. SolverError with "infeasible" when the minimum
/// violation exceeds 1e-9.
Result solve(const Problem& problem, const Options& options = {});

/// Returns the indices of a maximal linearly independent subset of `rows`,
/// preferring earlier rows.
std::vector<int> independent_rows(const Eigen::MatrixXd& rows, double relative_tolerance = 1e-10);

}  // namespace couplesolve::qp
