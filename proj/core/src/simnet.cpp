#include "couplesolve/simnet.hpp"

#include <limits>
#include <string>

#include "couplesolve/errors.hpp"

namespace couplesolve {

const char* phase_name(Phase phase) {
  return phase == Phase::kSlackExchange ? "SLACK_EXCHANGE" : "MULTIPLIER_EXCHANGE";
}

namespace {

void check_shape(const ConstraintTopology& topology, const BlockValues& values) {
  if (static_cast<int>(values.size()) != topology.n_constraints()) {
    throw ValidationError("exchange: expected values for " + std::to_string(topology.n_constraints()) +
                          " constraints");
  }
  for (int l = 0; l < topology.n_constraints(); ++l) {
    if (static_cast<std::size_t>(values[static_cast<std::size_t>(l)].size()) != topology.size(l)) {
      throw ValidationError("exchange: constraint " + std::to_string(l + 1) + " is missing participant values");
    }
  }
}

}  // namespace

DirectExchange::DirectExchange(const ConstraintTopology& topology)
    : topology_(&topology), per_phase_(SimNetwork::messages_per_phase(topology)) {}

std::vector<AgentView> DirectExchange::exchange(Phase, const BlockValues& values) {
  const auto& topo = *topology_;
  check_shape(topo, values);
  messages_ += per_phase_;
  std::vector<AgentView> views(static_cast<std::size_t>(topo.n_agents));
  for (int i = 0; i < topo.n_agents; ++i) {
    for (int l : topo.agent_constraints(i)) {
      const int k = topo.local_index(l, i);
      const auto& members = topo.participants[static_cast<std::size_t>(l)];
      NeighborValues nv;
      nv.constraint = l;
      for (int j : topo.neighborhoods[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)]) {
        nv.agents.push_back(members[static_cast<std::size_t>(j)]);
        nv.values.push_back(values[static_cast<std::size_t>(l)](j));
      }
      views[static_cast<std::size_t>(i)].push_back(std::move(nv));
    }
  }
  return views;
}

SimNetwork::SimNetwork(const ConstraintTopology& topology, Mode mode) : topology_(&topology), mode_(mode) {}

long long SimNetwork::messages_per_phase(const ConstraintTopology& topology) {
  long long total = 0;
  for (const auto& edges : topology.induced_edges) total += 2 * static_cast<long long>(edges.size());
  return total;
}

std::vector<AgentView> SimNetwork::exchange(Phase phase, const BlockValues& values) {
  const auto& topo = *topology_;
  check_shape(topo, values);
  phase_ = phase;
  mailbox_.clear();
  own_.clear();

  // Send: every participant posts to each induced neighbor.
  for (int l = 0; l < topo.n_constraints(); ++l) {
    const auto& members = topo.participants[static_cast<std::size_t>(l)];
    for (std::size_t k = 0; k < members.size(); ++k) {
      const double v = values[static_cast<std::size_t>(l)](static_cast<Eigen::Index>(k));
      own_[{l, members[k]}] = v;
    }
    for (const auto& [a, b] : topo.induced_edges[static_cast<std::size_t>(l)]) {
      mailbox_[{l, b, a}] = own_.at({l, a});
      mailbox_[{l, a, b}] = own_.at({l, b});
      messages_ += 2;
    }
  }

  // Receive: each agent reads its neighborhood from its own inbox.
  std::vector<AgentView> views(static_cast<std::size_t>(topo.n_agents));
  for (int i = 0; i < topo.n_agents; ++i) {
    for (int l : topo.agent_constraints(i)) {
      const int k = topo.local_index(l, i);
      const auto& members = topo.participants[static_cast<std::size_t>(l)];
      NeighborValues nv;
      nv.constraint = l;
      for (int j : topo.neighborhoods[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)]) {
        const int source = members[static_cast<std::size_t>(j)];
        const auto v = read(i, l, source);
        nv.agents.push_back(source);
        nv.values.push_back(v.value_or(std::numeric_limits<double>::quiet_NaN()));
      }
      views[static_cast<std::size_t>(i)].push_back(std::move(nv));
    }
    if (fault_ && fault_->agent == i) (void)read(i, fault_->constraint, fault_->source);
  }
  ++phases_;
  return views;
}

std::optional<double> SimNetwork::read(int agent, int l, int source) {
  if (source == agent) {
    auto it = own_.find({l, agent});
    if (it != own_.end()) return it->second;
  } else {
    auto it = mailbox_.find({l, agent, source});
    if (it != mailbox_.end()) return it->second;
  }
  const std::string what = std::string(phase_name(phase_)) + ": agent " + std::to_string(agent + 1) +
                           " read constraint " + std::to_string(l + 1) + " value of agent " +
                           std::to_string(source + 1) + " which was not delivered to it";
  if (mode_ == Mode::kStrict) throw LocalityViolation(what);
  violations_.push_back(what);
  return std::nullopt;
}

}  // namespace couplesolve
