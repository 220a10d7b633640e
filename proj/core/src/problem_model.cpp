#include "couplesolve/problem_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "couplesolve/errors.hpp"

namespace couplesolve {

double AgentObjective::value(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(hessian * x) + linear.dot(x) + constant;
}

Eigen::VectorXd AgentObjective::gradient(const Eigen::VectorXd& x) const { return hessian * x + linear; }

int ProblemSpec::total_dim() const {
  int total = 0;
  for (const auto& f : objectives) total += f.dim();
  return total;
}

Eigen::RowVectorXd ProblemSpec::row(int agent, int l) const {
  const auto& c = coupling[static_cast<std::size_t>(agent)];
  return l < m_ineq ? Eigen::RowVectorXd(c.ineq_coeffs.row(l)) : Eigen::RowVectorXd(c.eq_coeffs.row(l - m_ineq));
}

double ProblemSpec::offset(int agent, int l) const {
  const auto& c = coupling[static_cast<std::size_t>(agent)];
  return l < m_ineq ? c.ineq_offset(l) : c.eq_offset(l - m_ineq);
}

bool ProblemSpec::participates(int agent, int l) const {
  // A zero row with a nonzero offset still counts: the agent owns part of
  // the constant and must take part in allocating it.
  return offset(agent, l) != 0.0 || (row(agent, l).array() != 0.0).any();
}

void ProblemSpec::validate() const {
  const auto n = objectives.size();
  if (coupling.size() != n) throw ValidationError("problem: coupling blocks do not match agent count");
  if (graph.n_agents() != static_cast<int>(n)) {
    throw ValidationError("problem: graph has " + std::to_string(graph.n_agents()) + " agents, expected " +
                          std::to_string(n));
  }
  if (m_ineq < 0 || q_eq < 0) throw ValidationError("problem: negative constraint count");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string who = "agent " + std::to_string(i + 1);
    const auto& f = objectives[i];
    const auto d = f.linear.size();
    if (d == 0) throw ValidationError(who + ": dimension must be positive");
    if (f.hessian.rows() != d || f.hessian.cols() != d) throw ValidationError(who + ": hessian must be dim x dim");
    const double scale = 1.0 + f.hessian.cwiseAbs().maxCoeff();
    if ((f.hessian - f.hessian.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw ValidationError(who + ": hessian is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.hessian, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
      throw ValidationError(who + ": hessian is not positive semidefinite");
    }
    const auto& c = coupling[i];
    if (c.ineq_coeffs.rows() != m_ineq || c.ineq_coeffs.cols() != d || c.ineq_offset.size() != m_ineq) {
      throw ValidationError(who + ": inequality block has wrong shape");
    }
    if (c.eq_coeffs.rows() != q_eq || c.eq_coeffs.cols() != d || c.eq_offset.size() != q_eq) {
      throw ValidationError(who + ": equality block has wrong shape");
    }
  }
}

std::vector<LicqReport> validate_licq(const ProblemSpec& problem, const ConstraintTopology& topology) {
  std::vector<LicqReport> reports;
  for (int i = 0; i < problem.n_agents(); ++i) {
    const auto constraints = topology.agent_constraints(i);
    const int d = problem.objectives[static_cast<std::size_t>(i)].dim();
    LicqReport report;
    report.agent = i;
    report.rows = static_cast<int>(constraints.size());
    if (!constraints.empty()) {
      Eigen::MatrixXd stacked(report.rows, d);
      for (int r = 0; r < report.rows; ++r) stacked.row(r) = problem.row(i, constraints[static_cast<std::size_t>(r)]);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
      const Eigen::VectorXd& sv = svd.singularValues();
      report.sigma_max = sv.maxCoeff();
      report.sigma_min = report.rows > d ? 0.0 : sv.minCoeff();
      report.full_row_rank = report.rows <= d && report.sigma_min > 1e-9 * report.sigma_max;
      report.gram_lambda_min = report.sigma_min * report.sigma_min;
    }
    reports.push_back(report);
  }
  return reports;
}

double ConstraintResiduals::max_ineq_violation() const {
  return ineq.size() == 0 ? 0.0 : std::max(0.0, ineq.maxCoeff());
}

double ConstraintResiduals::max_eq_residual() const { return eq.size() == 0 ? 0.0 : eq.cwiseAbs().maxCoeff(); }

namespace {

void check_primal(const ProblemSpec& problem, const Primal& x) {
  if (static_cast<int>(x.size()) != problem.n_agents()) throw ValidationError("primal: wrong agent count");
  for (int i = 0; i < problem.n_agents(); ++i) {
    if (x[static_cast<std::size_t>(i)].size() != problem.objectives[static_cast<std::size_t>(i)].dim()) {
      throw ValidationError("primal: agent " + std::to_string(i + 1) + " has wrong dimension");
    }
  }
}

}  // namespace

ConstraintResiduals aggregate_violation(const ProblemSpec& problem, const Primal& x) {
  check_primal(problem, x);
  ConstraintResiduals r{Eigen::VectorXd::Zero(problem.m_ineq), Eigen::VectorXd::Zero(problem.q_eq)};
  for (int i = 0; i < problem.n_agents(); ++i) {
    const auto& c = problem.coupling[static_cast<std::size_t>(i)];
    const auto& xi = x[static_cast<std::size_t>(i)];
    r.ineq += c.ineq_coeffs * xi + c.ineq_offset;
    r.eq += c.eq_coeffs * xi + c.eq_offset;
  }
  return r;
}

double objective_value(const ProblemSpec& problem, const Primal& x) {
  check_primal(problem, x);
  double total = 0.0;
  for (int i = 0; i < problem.n_agents(); ++i)
    total += problem.objectives[static_cast<std::size_t>(i)].value(x[static_cast<std::size_t>(i)]);
  return total;
}

double strong_convexity_modulus(const ProblemSpec& problem) {
  double nu = std::numeric_limits<double>::infinity();
  for (const auto& f : problem.objectives) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.hessian, Eigen::EigenvaluesOnly);
    nu = std::min(nu, eig.eigenvalues().minCoeff());
  }
  return problem.objectives.empty() ? 0.0 : std::max(0.0, nu);
}

double gradient_lipschitz(const AgentObjective& objective) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(objective.hessian, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

LipschitzBound lipschitz_bound(const ProblemSpec& problem, const ConstraintTopology& topology,
                               const WeightSet& weights, LipschitzRule rule) {
  if (strong_convexity_modulus(problem) <= 0.0) {
    throw ValidationError("lipschitz bound requires strongly convex objectives (nu > 0)");
  }
  if (static_cast<int>(weights.size()) != topology.n_constraints()) {
    throw ValidationError("lipschitz bound: one weight matrix per constraint required");
  }
  LipschitzBound bound;
  for (const auto& w : weights) bound.complement_norms.push_back(spectral_norm_of_complement(w));

  const auto licq = validate_licq(problem, topology);
  double max_agent = 0.0;
  for (int i = 0; i < problem.n_agents(); ++i) {
    const auto& report = licq[static_cast<std::size_t>(i)];
    if (!report.full_row_rank) {
      throw ValidationError("lipschitz bound: agent " + std::to_string(i + 1) + " fails the row-rank check");
    }
    double a_i = 0.0;
    if (report.rows > 0) {
      double max_norm = 0.0;
      for (int l : topology.agent_constraints(i))
        max_norm = std::max(max_norm, bound.complement_norms[static_cast<std::size_t>(l)]);
      const double ratio = gradient_lipschitz(problem.objectives[static_cast<std::size_t>(i)]) / report.gram_lambda_min;
      a_i = max_norm * (rule == LipschitzRule::kConditionRatio ? ratio : std::sqrt(ratio));
    }
    bound.multiplier_constants.push_back(a_i);
    max_agent = std::max(max_agent, a_i);
  }
  double max_block = 0.0;
  for (int l = 0; l < topology.n_constraints(); ++l) {
    max_block = std::max(max_block, bound.complement_norms[static_cast<std::size_t>(l)] *
                                        std::sqrt(static_cast<double>(topology.size(l))));
  }
  bound.alpha_phi = max_agent * max_block * std::sqrt(static_cast<double>(topology.n_constraints()));
  return bound;
}

}  // namespace couplesolve
