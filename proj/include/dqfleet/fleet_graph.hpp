#ifndef DQFLEET_FLEET_GRAPH_HPP
#define DQFLEET_FLEET_GRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dqf {

using NodeId = int;  // 1-based labels, matching the fleet figures

/// Undirected, connected communication graph over nodes 1..l.
class FleetGraph {
 public:
  /// Builds from an explicit edge list; validates ids, symmetry is implied,
  /// self-loops rejected. Throws if the graph is not connected (a single
  /// node with no edges counts as connected).
  FleetGraph(int n_nodes, const std::vector<std::pair<NodeId, NodeId>>& edges);

  /// Erdős–Rényi draw with edge probability p, redrawn until connected
  /// (deterministic for a fixed seed; gives up after 1e6 attempts).
  static FleetGraph random_connected(int l, double p, std::uint64_t seed);

  int size() const { return n_; }
  bool has_edge(NodeId i, NodeId j) const;
  /// Neighbours of i, ascending, excluding i.
  std::vector<NodeId> neighbours(NodeId i) const;
  int degree(NodeId i) const;

  /// One "i j" pair per line, i < j, 1-based.
  std::string to_edge_list() const;
  static FleetGraph from_edge_list(const std::string& text);

 private:
  void check_node(NodeId i) const;
  bool connected() const;

  int n_ = 0;
  std::vector<std::vector<bool>> adj_;  // (n+1)x(n+1), row/col 0 unused
};

/// V_i = N_i ∪ {i}, sorted ascending. Defines the stacking order of the
/// distributed filter state.
struct Neighbourhood {
  NodeId owner = 0;
  std::vector<NodeId> members;

  int size() const { return static_cast<int>(members.size()); }
  bool contains(NodeId j) const {
    return std::binary_search(members.begin(), members.end(), j);
  }
  /// Slot of node j in the stacking order; throws if j is not tracked.
  int slot_of(NodeId j) const;
};

Neighbourhood neighbourhood(const FleetGraph& g, NodeId i);
/// Λ_{i,k} = V_i ∩ V_k, sorted ascending.
std::vector<NodeId> common_members(const FleetGraph& g, NodeId i, NodeId k);

struct LeaderSet {
  std::vector<NodeId> leaders;  // sorted

  bool is_leader(NodeId i) const {
    return std::binary_search(leaders.begin(), leaders.end(), i);
  }
};

/// Synchronous per-round mailbox. Sends are only legal along edges; all
/// payloads sent in a round become visible together at delivery.
template <typename Payload>
class RoundBus {
 public:
  explicit RoundBus(const FleetGraph& g) : graph_(&g) {}

  void send(NodeId from, NodeId to, Payload payload) {
    if (!graph_->has_edge(from, to)) {
      throw std::invalid_argument("send along a non-edge");
    }
    auto [it, inserted] = box_.emplace(std::make_pair(to, from), std::move(payload));
    if (!inserted) throw std::invalid_argument("duplicate message in round");
  }

  /// Messages for receiver i, ascending by sender.
  std::vector<std::pair<NodeId, const Payload*>> inbox(NodeId i) const {
    std::vector<std::pair<NodeId, const Payload*>> out;
    for (auto it = box_.lower_bound({i, 0}); it != box_.end() && it->first.first == i; ++it) {
      out.emplace_back(it->first.second, &it->second);
    }
    return out;
  }

  void clear() { box_.clear(); }

 private:
  const FleetGraph* graph_;
  std::map<std::pair<NodeId, NodeId>, Payload> box_;  // (receiver, sender)
};

/// One round of all-to-neighbours exchange: payload(i, j) is what i sends
/// to j; returns each node's inbox, ascending by sender.
template <typename Payload, typename Fn>
std::vector<std::vector<std::pair<NodeId, Payload>>> exchange(const FleetGraph& g, Fn&& payload) {
  std::vector<std::vector<std::pair<NodeId, Payload>>> inboxes(g.size() + 1);
  for (NodeId j = 1; j <= g.size(); ++j) {
    for (NodeId i : g.neighbours(j)) {
      inboxes[j].emplace_back(i, payload(i, j));
    }
  }
  return inboxes;
}

}  // namespace dqf

#endif  // DQFLEET_FLEET_GRAPH_HPP
