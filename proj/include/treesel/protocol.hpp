#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "treesel/error.hpp"
#include "treesel/model.hpp"
#include "treesel/rng.hpp"

namespace treesel {

// Coordination-free selection: every sensor owns an identical splitmix64
// stream, draws the same alpha each round and transmits exactly when some
// node in its subtree has alpha <= p. Nodes only ever send observation
// packets; each forwarding node merges its children's packets with its own
// measurement.

struct NodeState {
  std::size_t id = 0;
  std::size_t parent = 0;
  std::vector<std::size_t> children;
  double p_self = 0.0;
  std::vector<double> p_children;  ///< parallel to children
  std::uint64_t prng_state = 0;
};

struct NodeDecision {
  bool transmit = false;
  std::vector<std::size_t> expected_inbound;  ///< children that will send a packet
};

inline NodeDecision node_decide(const NodeState& node, double alpha) {
  NodeDecision d;
  for (std::size_t k = 0; k < node.children.size(); ++k) {
    if (alpha <= node.p_children[k]) d.expected_inbound.push_back(node.children[k]);
  }
  d.transmit = !d.expected_inbound.empty() || alpha <= node.p_self;
  return d;
}

struct Transmission {
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t payload = 0;  ///< number of sensor observations in the packet
};

struct RoundOutcome {
  double alpha = 0.0;
  SubTree selected;
  std::vector<Transmission> transmissions;
  double energy = 0.0;
  std::size_t control_messages = 0;
};

/// The whole network: one NodeState per sensor plus the edge costs.
class Network {
 public:
  Network(const SensorTree& tree, const MarginalSchedule& p, std::uint64_t seed) : tree_(tree) {
    if (p.size() != static_cast<Eigen::Index>(tree.size()))
      throw Error(ErrorKind::DimensionMismatch, "schedule length differs from sensor count");
    auto prob = [&](std::size_t id) { return p(static_cast<Eigen::Index>(id - 1)); };
    nodes_.resize(tree.size());
    for (std::size_t i = 1; i <= tree.size(); ++i) {
      NodeState& n = nodes_[i - 1];
      n.id = i;
      n.parent = tree.parent(i);
      n.children = tree.children(i);
      n.p_self = prob(i);
      for (std::size_t c : n.children) n.p_children.push_back(prob(c));
      n.prng_state = seed;
    }
    const auto& topo = tree.topological_order();
    processing_order_.assign(topo.rbegin(), topo.rend());
  }

  const std::vector<NodeState>& nodes() const noexcept { return nodes_; }
  /// Fault-injection access: lets tests desynchronize a node's view.
  NodeState& node(std::size_t id) { return nodes_.at(id - 1); }

  /// One round: every node draws alpha from its own copy of the shared
  /// stream, then the round is resolved leaves first.
  RoundOutcome simulate_round() {
    std::vector<double> alpha(nodes_.size() + 1, 0.0);
    for (auto& n : nodes_) {
      const Draw d = shared_draw(n.prng_state);
      alpha[n.id] = d.alpha;
      n.prng_state = d.next_state;
    }
    return resolve(alpha);
  }

  /// Resolves a round in which every node holds the same alpha; the streams
  /// are left untouched.
  RoundOutcome simulate_round_at(double alpha) { return resolve(std::vector<double>(nodes_.size() + 1, alpha)); }

 private:
  /// Each node decides, merges whatever its children forwarded, and checks
  /// the inbound packets against what it predicted. Throws
  /// AgreementViolation on any mismatch.
  RoundOutcome resolve(const std::vector<double>& alpha) const {
    RoundOutcome out;
    const std::size_t m = nodes_.size();
    if (m == 0) return out;
    out.alpha = alpha[nodes_.front().id];

    std::vector<std::size_t> payload(m + 1, 0);            // packet size a node sends upward
    std::vector<std::vector<std::size_t>> inbound(m + 1);  // ids that actually sent to a node
    std::vector<std::size_t> selected;
    for (std::size_t id : processing_order_) {
      const NodeState& n = nodes_[id - 1];
      if (alpha[id] != out.alpha)
        throw Error(ErrorKind::AgreementViolation, "node " + std::to_string(id) + " drew a different alpha");
      const NodeDecision d = node_decide(n, alpha[id]);
      std::vector<std::size_t> actual = inbound[id];
      std::sort(actual.begin(), actual.end());
      if (actual != d.expected_inbound)
        throw Error(ErrorKind::AgreementViolation,
                    "node " + std::to_string(id) + " received packets it did not expect (or missed some)");
      if (!d.transmit) continue;
      std::size_t count = 1;
      for (std::size_t c : actual) count += payload[c];
      payload[id] = count;
      out.transmissions.push_back({id, n.parent, count});
      out.energy += tree_.cost(id);
      selected.push_back(id);
      if (n.parent != 0) inbound[n.parent].push_back(id);
    }
    out.selected = SubTree(std::move(selected));
    return out;
  }

  SensorTree tree_;
  std::vector<NodeState> nodes_;
  std::vector<std::size_t> processing_order_;
};

struct RunSummary {
  std::size_t rounds = 0;
  MarginalSchedule frequency;  ///< share of rounds in which each sensor reported
  double mean_energy = 0.0;
  std::size_t control_messages = 0;
  std::size_t packets = 0;
  std::map<SubTree, std::size_t> tree_counts;  ///< how often each subtree was selected
  std::vector<RoundOutcome> log;               ///< per-round outcomes when requested
};

inline RunSummary simulate_run(const SensorTree& tree, const MarginalSchedule& p, std::uint64_t seed,
                               std::size_t rounds, bool keep_log = false) {
  Network net(tree, p, seed);
  RunSummary s;
  s.rounds = rounds;
  s.frequency = MarginalSchedule::Zero(static_cast<Eigen::Index>(tree.size()));
  double energy = 0.0;
  for (std::size_t k = 0; k < rounds; ++k) {
    RoundOutcome r = net.simulate_round();
    for (std::size_t id : r.selected.members()) s.frequency(static_cast<Eigen::Index>(id - 1)) += 1.0;
    energy += r.energy;
    s.control_messages += r.control_messages;
    s.packets += r.transmissions.size();
    ++s.tree_counts[r.selected];
    if (keep_log) s.log.push_back(std::move(r));
  }
  if (rounds) {
    s.frequency /= static_cast<double>(rounds);
    s.mean_energy = energy / static_cast<double>(rounds);
  }
  return s;
}

}  // namespace treesel
