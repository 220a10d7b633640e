#pragma once

#include <vector>

#include <Eigen/Dense>

#include "couplesolve/problem_model.hpp"

namespace couplesolve {

/// Global minimizer of the coupled program.
struct OracleSolution {
  Primal x_star;
  double f_star = 0.0;
  Eigen::VectorXd ineq_multipliers;  // one per coupling inequality
  Eigen::VectorXd eq_multipliers;    // one per coupling equality
  std::vector<int> active_set;       // active coupling inequalities
  /// False when the stacked rows were rank deficient or the minimizer is not
  /// unique; the multipliers are then one valid choice.
  bool unique = true;
};

/// Solves the stacked QP with the coupling rows as its only constraints,
/// using the same active-set machinery as the local solver plus a
/// sum-of-violations phase 1. Throws SolverError when infeasible or
/// unbounded.
OracleSolution solve_centralized(const ProblemSpec& problem);

/// f(x) minus the Lagrangian dual function at (mu, lambda). The dual
/// function is +inf-safe: when some agent's Lagrangian is unbounded below the
/// gap is +infinity.
double duality_gap(const ProblemSpec& problem, const Primal& x, const Eigen::VectorXd& ineq_multipliers,
                   const Eigen::VectorXd& eq_multipliers);

}  // namespace couplesolve
