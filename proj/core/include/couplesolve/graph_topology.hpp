#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace couplesolve {

struct ProblemSpec;

/// Undirected edge between two agents, stored with first < second.
using Edge = std::pair<int, int>;

/// Undirected communication graph over agents 0..n_agents-1.
///
/// Edges are canonicalized on construction: each pair is stored once with
/// the smaller index first, and the list is sorted, so two graphs built from
/// the same edge set in different orders compare equal.
class Graph {
 public:
  Graph() = default;
  /// Throws ValidationError on self-loops or out-of-range indices.
  Graph(int n_agents, std::vector<Edge> edges);

  /// Path 0-1-...-(n-1).
  static Graph line(int n_agents);
  static Graph complete(int n_agents);

  int n_agents() const { return n_agents_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_edge(int i, int j) const;
  /// Neighbors of i, excluding i, ascending.
  const std::vector<int>& neighbors(int i) const { return adjacency_[static_cast<std::size_t>(i)]; }

  bool operator==(const Graph& other) const {
    return n_agents_ == other.n_agents_ && edges_ == other.edges_;
  }

 private:
  int n_agents_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
};

/// Which agents take part in each coupling constraint, and how they talk.
///
/// Constraints are indexed l = 0..M+Q-1; l < M are the inequality rows and
/// l >= M the equality rows (equality q has l = M + q). Participants of each
/// constraint are kept in ascending agent order, and every per-constraint
/// vector or matrix in the library is indexed by position in that list
/// ("local index").
struct ConstraintTopology {
  int n_agents = 0;
  int m_ineq = 0;
  int q_eq = 0;
  /// participants[l]: agents in V^[l], ascending.
  std::vector<std::vector<int>> participants;
  /// induced_edges[l]: edges of the communication graph with both ends in V^[l].
  std::vector<std::vector<Edge>> induced_edges;
  /// agent_ineq_sets[i]: inequality indices m touching agent i, ascending.
  std::vector<std::vector<int>> agent_ineq_sets;
  /// agent_eq_sets[i]: equality indices q (0-based within Q) touching agent i.
  std::vector<std::vector<int>> agent_eq_sets;
  /// neighborhoods[l][k]: local indices of the in-subgraph neighbors of the
  /// k-th participant, itself included, ascending.
  std::vector<std::vector<std::vector<int>>> neighborhoods;

  int n_constraints() const { return m_ineq + q_eq; }
  bool is_equality(int l) const { return l >= m_ineq; }
  std::size_t size(int l) const { return participants[static_cast<std::size_t>(l)].size(); }
  /// Position of agent within V^[l], or -1 when it does not participate.
  int local_index(int l, int agent) const;
  /// All constraints l agent participates in: inequalities first, then
  /// equalities (as M + q), each ascending.
  std::vector<int> agent_constraints(int agent) const;
  /// Sum over l of |V^[l]|: the number of slack coordinates.
  std::size_t slack_dimension() const;

  bool operator==(const ConstraintTopology&) const = default;
};

/// Doubly stochastic weights P^[l] over the participants of one constraint.
struct WeightMatrix {
  int constraint = 0;
  Eigen::MatrixXd entries;

  /// I - P
  Eigen::MatrixXd laplacian_like() const {
    return Eigen::MatrixXd::Identity(entries.rows(), entries.cols()) - entries;
  }
};

/// One WeightMatrix per constraint, indexed by l.
using WeightSet = std::vector<WeightMatrix>;

/// Connectivity verdict for one induced subgraph.
struct ConnectivityReport {
  int constraint = 0;
  std::size_t participants = 0;
  bool connected = true;
};

ConstraintTopology induce_topology(const ProblemSpec& problem, const Graph& graph);

/// Breadth-first reachability over each induced subgraph. Constraints with
/// at most one participant count as connected.
std::vector<ConnectivityReport> check_connectivity(const ConstraintTopology& topology);

/// Metropolis-Hastings weights p_ij = 1 / (1 + max(deg_i, deg_j)) on the
/// induced subgraph, with the remainder on the diagonal. Throws
/// ValidationError when the subgraph is disconnected.
WeightMatrix metropolis_weights(const ConstraintTopology& topology, int l);

/// metropolis_weights for every constraint.
WeightSet metropolis_weight_set(const ConstraintTopology& topology);

/// Checks shape, nonnegativity, symmetry, unit row sums and that the
/// sparsity pattern matches the induced neighborhoods. Throws
/// ValidationError naming the first broken property.
void validate_weights(const ConstraintTopology& topology, const WeightMatrix& weights,
                      double tolerance = 1e-12);

/// True iff Null(I - P) is exactly span(1), i.e. rank(I - P) = |V| - 1.
bool null_range_check(const WeightMatrix& weights, double tolerance = 1e-10);

/// Spectral norm of I - P (0 for an empty constraint).
double spectral_norm_of_complement(const WeightMatrix& weights);

}  // namespace couplesolve
