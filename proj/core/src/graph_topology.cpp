#include "couplesolve/graph_topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "couplesolve/errors.hpp"
#include "couplesolve/problem_model.hpp"

namespace couplesolve {

namespace {

std::string constraint_name(int l) { return "constraint " + std::to_string(l + 1); }

}  // namespace

Graph::Graph(int n_agents, std::vector<Edge> edges) : n_agents_(n_agents) {
  if (n_agents < 0) throw ValidationError("graph: negative agent count");
  for (auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n_agents || j >= n_agents) {
      throw ValidationError("graph: edge (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                            ") out of range");
    }
    if (i == j) throw ValidationError("graph: self-loop at agent " + std::to_string(i + 1));
    if (i > j) std::swap(i, j);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  adjacency_.assign(static_cast<std::size_t>(n_agents), {});
  for (const auto& [i, j] : edges_) {
    adjacency_[static_cast<std::size_t>(i)].push_back(j);
    adjacency_[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

Graph Graph::line(int n_agents) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n_agents; ++i) edges.emplace_back(i, i + 1);
  return Graph(n_agents, std::move(edges));
}

Graph Graph::complete(int n_agents) {
  std::vector<Edge> edges;
  for (int i = 0; i < n_agents; ++i)
    for (int j = i + 1; j < n_agents; ++j) edges.emplace_back(i, j);
  return Graph(n_agents, std::move(edges));
}

bool Graph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges_.begin(), edges_.end(), Edge{i, j});
}

int ConstraintTopology::local_index(int l, int agent) const {
  const auto& members = participants[static_cast<std::size_t>(l)];
  auto it = std::lower_bound(members.begin(), members.end(), agent);
  if (it == members.end() || *it != agent) return -1;
  return static_cast<int>(it - members.begin());
}

std::vector<int> ConstraintTopology::agent_constraints(int agent) const {
  std::vector<int> out = agent_ineq_sets[static_cast<std::size_t>(agent)];
  for (int q : agent_eq_sets[static_cast<std::size_t>(agent)]) out.push_back(m_ineq + q);
  return out;
}

std::size_t ConstraintTopology::slack_dimension() const {
  std::size_t total = 0;
  for (const auto& members : participants) total += members.size();
  return total;
}

ConstraintTopology induce_topology(const ProblemSpec& problem, const Graph& graph) {
  if (graph.n_agents() != problem.n_agents()) {
    throw ValidationError("graph has " + std::to_string(graph.n_agents()) + " agents but problem has " +
                          std::to_string(problem.n_agents()));
  }
  ConstraintTopology topo;
  topo.n_agents = problem.n_agents();
  topo.m_ineq = problem.m_ineq;
  topo.q_eq = problem.q_eq;
  const int n_constraints = problem.n_constraints();
  topo.participants.resize(static_cast<std::size_t>(n_constraints));
  topo.induced_edges.resize(static_cast<std::size_t>(n_constraints));
  topo.neighborhoods.resize(static_cast<std::size_t>(n_constraints));
  topo.agent_ineq_sets.assign(static_cast<std::size_t>(topo.n_agents), {});
  topo.agent_eq_sets.assign(static_cast<std::size_t>(topo.n_agents), {});

  for (int l = 0; l < n_constraints; ++l) {
    auto& members = topo.participants[static_cast<std::size_t>(l)];
    for (int i = 0; i < topo.n_agents; ++i) {
      if (!problem.participates(i, l)) continue;
      members.push_back(i);
      if (l < problem.m_ineq) {
        topo.agent_ineq_sets[static_cast<std::size_t>(i)].push_back(l);
      } else {
        topo.agent_eq_sets[static_cast<std::size_t>(i)].push_back(l - problem.m_ineq);
      }
    }
    auto& induced = topo.induced_edges[static_cast<std::size_t>(l)];
    for (const auto& [i, j] : graph.edges()) {
      if (std::binary_search(members.begin(), members.end(), i) &&
          std::binary_search(members.begin(), members.end(), j)) {
        induced.emplace_back(i, j);
      }
    }
    auto& hoods = topo.neighborhoods[static_cast<std::size_t>(l)];
    hoods.assign(members.size(), {});
    for (std::size_t k = 0; k < members.size(); ++k) hoods[k].push_back(static_cast<int>(k));
    for (const auto& [i, j] : induced) {
      const int ki = topo.local_index(l, i);
      const int kj = topo.local_index(l, j);
      hoods[static_cast<std::size_t>(ki)].push_back(kj);
      hoods[static_cast<std::size_t>(kj)].push_back(ki);
    }
    for (auto& hood : hoods) std::sort(hood.begin(), hood.end());
  }
  return topo;
}

std::vector<ConnectivityReport> check_connectivity(const ConstraintTopology& topology) {
  std::vector<ConnectivityReport> reports;
  for (int l = 0; l < topology.n_constraints(); ++l) {
    const auto& hoods = topology.neighborhoods[static_cast<std::size_t>(l)];
    ConnectivityReport report{l, hoods.size(), true};
    if (hoods.size() > 1) {
      std::vector<bool> seen(hoods.size(), false);
      std::queue<int> frontier;
      frontier.push(0);
      seen[0] = true;
      std::size_t reached = 1;
      while (!frontier.empty()) {
        const int k = frontier.front();
        frontier.pop();
        for (int nb : hoods[static_cast<std::size_t>(k)]) {
          if (!seen[static_cast<std::size_t>(nb)]) {
            seen[static_cast<std::size_t>(nb)] = true;
            ++reached;
            frontier.push(nb);
          }
        }
      }
      report.connected = reached == hoods.size();
    }
    reports.push_back(report);
  }
  return reports;
}

WeightMatrix metropolis_weights(const ConstraintTopology& topology, int l) {
  if (l < 0 || l >= topology.n_constraints()) throw ValidationError("constraint index out of range");
  if (!check_connectivity(topology)[static_cast<std::size_t>(l)].connected) {
    throw ValidationError(constraint_name(l) + ": induced subgraph is disconnected");
  }
  const auto& hoods = topology.neighborhoods[static_cast<std::size_t>(l)];
  const auto n = static_cast<Eigen::Index>(hoods.size());
  WeightMatrix w{l, Eigen::MatrixXd::Zero(n, n)};
  // Degrees exclude the self entry.
  auto degree = [&](Eigen::Index k) { return static_cast<double>(hoods[static_cast<std::size_t>(k)].size() - 1); };
  for (Eigen::Index k = 0; k < n; ++k) {
    for (int nb : hoods[static_cast<std::size_t>(k)]) {
      if (nb == k) continue;
      w.entries(k, nb) = 1.0 / (1.0 + std::max(degree(k), degree(nb)));
    }
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != k) off += w.entries(k, j);
    w.entries(k, k) = 1.0 - off;
  }
  return w;
}

WeightSet metropolis_weight_set(const ConstraintTopology& topology) {
  WeightSet set;
  set.reserve(static_cast<std::size_t>(topology.n_constraints()));
  for (int l = 0; l < topology.n_constraints(); ++l) set.push_back(metropolis_weights(topology, l));
  return set;
}

void validate_weights(const ConstraintTopology& topology, const WeightMatrix& weights, double tolerance) {
  const int l = weights.constraint;
  if (l < 0 || l >= topology.n_constraints()) throw ValidationError("weights: constraint index out of range");
  const auto& hoods = topology.neighborhoods[static_cast<std::size_t>(l)];
  const auto n = static_cast<Eigen::Index>(hoods.size());
  const auto& p = weights.entries;
  const std::string name = "weights for " + constraint_name(l);
  if (p.rows() != n || p.cols() != n) {
    throw ValidationError(name + ": expected " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& hood = hoods[static_cast<std::size_t>(i)];
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      row_sum += p(i, j);
      if (std::abs(p(i, j) - p(j, i)) > tolerance) throw ValidationError(name + ": not symmetric");
      const bool neighbor = std::binary_search(hood.begin(), hood.end(), static_cast<int>(j));
      if (neighbor && !(p(i, j) > 0.0)) {
        throw ValidationError(name + ": entry (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                              ") must be positive");
      }
      if (!neighbor && p(i, j) != 0.0) {
        throw ValidationError(name + ": entry (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                              ") must be zero");
      }
    }
    if (std::abs(row_sum - 1.0) > tolerance) throw ValidationError(name + ": row sums must equal 1");
  }
}

bool null_range_check(const WeightMatrix& weights, double tolerance) {
  const auto n = weights.entries.rows();
  if (n <= 1) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(weights.laplacian_like());
  const Eigen::VectorXd& values = eig.eigenvalues();
  // Rank n-1 with the kernel spanned by the ones vector.
  Eigen::Index zero_count = 0;
  for (Eigen::Index k = 0; k < n; ++k)
    if (std::abs(values(k)) <= tolerance) ++zero_count;
  if (zero_count != 1) return false;
  const Eigen::VectorXd residual = weights.laplacian_like() * Eigen::VectorXd::Ones(n);
  return residual.cwiseAbs().maxCoeff() <= tolerance;
}

double spectral_norm_of_complement(const WeightMatrix& weights) {
  if (weights.entries.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(weights.laplacian_like(), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace couplesolve
