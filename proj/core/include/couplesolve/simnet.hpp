#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "couplesolve/graph_topology.hpp"
#include "couplesolve/local_solver.hpp"

namespace couplesolve {

enum class Phase { kSlackExchange, kMultiplierExchange };

const char* phase_name(Phase phase);

/// One scalar per participant per constraint: blocks[l](k) belongs to the
/// k-th participant of constraint l.
using BlockValues = std::vector<Eigen::VectorXd>;

/// Synchronous neighborhood exchange. Every agent posts its own value for
/// each constraint it participates in and receives the values of its
/// neighbors N_i^[l] (itself included). exchange() is a barrier: it returns
/// only after all deliveries of the phase.
class Exchange {
 public:
  virtual ~Exchange() = default;
  /// Returns one AgentView per agent.
  virtual std::vector<AgentView> exchange(Phase phase, const BlockValues& values) = 0;
  /// Messages sent so far (self-deliveries excluded).
  virtual long long messages() const = 0;
};

/// Builds neighborhood views straight from shared memory. Counts the
/// messages the protocol would have sent, so traces match SimNetwork's.
class DirectExchange final : public Exchange {
 public:
  explicit DirectExchange(const ConstraintTopology& topology);
  std::vector<AgentView> exchange(Phase phase, const BlockValues& values) override;
  long long messages() const override { return messages_; }

 private:
  const ConstraintTopology* topology_;
  long long per_phase_ = 0;
  long long messages_ = 0;
};

/// An agent that will try to read a value it was never sent.
struct InjectedFault {
  int agent = 0;
  int constraint = 0;
  int source = 0;
};

/// Simulated message-passing layer.
///
/// Each phase fills a mailbox keyed by (constraint, receiver, sender) with
/// one message per direction of every induced edge; agents then read only
/// from their own inbox. Reading a sender that never wrote to the agent is a
/// locality violation: thrown in strict mode, recorded in audit mode.
class SimNetwork final : public Exchange {
 public:
  enum class Mode { kStrict, kAudit };

  explicit SimNetwork(const ConstraintTopology& topology, Mode mode = Mode::kStrict);

  std::vector<AgentView> exchange(Phase phase, const BlockValues& values) override;
  long long messages() const override { return messages_; }

  /// Reads the value `source` delivered to `agent` for constraint l in the
  /// current phase. Own values are always readable.
  std::optional<double> read(int agent, int l, int source);

  /// The faulty agent reads `source` during every subsequent exchange.
  void inject_fault(const InjectedFault& fault) { fault_ = fault; }

  const std::vector<std::string>& violations() const { return violations_; }
  bool clean() const { return violations_.empty(); }
  int phases_completed() const { return phases_; }

  /// Messages one phase costs: sum over l of 2 |S^[l]|.
  static long long messages_per_phase(const ConstraintTopology& topology);

 private:
  const ConstraintTopology* topology_;
  Mode mode_;
  Phase phase_ = Phase::kSlackExchange;
  std::map<std::tuple<int, int, int>, double> mailbox_;
  std::map<std::pair<int, int>, double> own_;
  std::optional<InjectedFault> fault_;
  std::vector<std::string> violations_;
  long long messages_ = 0;
  int phases_ = 0;
};

}  // namespace couplesolve
