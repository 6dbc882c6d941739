#include "dqfleet/fleet_graph.hpp"

#include <queue>
#include <random>
#include <sstream>

namespace dqf {

FleetGraph::FleetGraph(int n_nodes, const std::vector<std::pair<NodeId, NodeId>>& edges)
    : n_(n_nodes), adj_(n_nodes + 1, std::vector<bool>(n_nodes + 1, false)) {
  if (n_nodes < 1) throw std::invalid_argument("graph needs at least one node");
  for (const auto& [i, j] : edges) {
    check_node(i);
    check_node(j);
    if (i == j) throw std::invalid_argument("self-loops are not allowed");
    adj_[i][j] = adj_[j][i] = true;
  }
  if (!connected()) throw std::invalid_argument("graph is not connected");
}

void FleetGraph::check_node(NodeId i) const {
  if (i < 1 || i > n_) throw std::invalid_argument("node id out of range");
}

bool FleetGraph::connected() const {
  std::vector<bool> seen(n_ + 1, false);
  std::queue<NodeId> q;
  q.push(1);
  seen[1] = true;
  int count = 1;
  while (!q.empty()) {
    const NodeId i = q.front();
    q.pop();
    for (NodeId j = 1; j <= n_; ++j) {
      if (adj_[i][j] && !seen[j]) {
        seen[j] = true;
        ++count;
        q.push(j);
      }
    }
  }
  return count == n_;
}

FleetGraph FleetGraph::random_connected(int l, double p, std::uint64_t seed) {
  if (l < 2) throw std::invalid_argument("random graph needs at least two nodes");
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("edge probability must be in (0, 1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId i = 1; i <= l; ++i) {
      for (NodeId j = i + 1; j <= l; ++j) {
        if (coin(rng)) edges.emplace_back(i, j);
      }
    }
    try {
      return FleetGraph(l, edges);
    } catch (const std::invalid_argument&) {
      // disconnected draw; redraw
    }
  }
  throw std::runtime_error("failed to draw a connected graph after 1e6 attempts");
}

bool FleetGraph::has_edge(NodeId i, NodeId j) const {
  check_node(i);
  check_node(j);
  return adj_[i][j];
}

std::vector<NodeId> FleetGraph::neighbours(NodeId i) const {
  check_node(i);
  std::vector<NodeId> out;
  for (NodeId j = 1; j <= n_; ++j) {
    if (adj_[i][j]) out.push_back(j);
  }
  return out;
}

int FleetGraph::degree(NodeId i) const {
  return static_cast<int>(neighbours(i).size());
}

std::string FleetGraph::to_edge_list() const {
  std::ostringstream os;
  os << "# nodes " << n_ << "\n";
  for (NodeId i = 1; i <= n_; ++i) {
    for (NodeId j = i + 1; j <= n_; ++j) {
      if (adj_[i][j]) os << i << " " << j << "\n";
    }
  }
  return os.str();
}

FleetGraph FleetGraph::from_edge_list(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int n = 0;
  std::vector<std::pair<NodeId, NodeId>> edges;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first.empty()) continue;
    if (first == "#") {
      std::string key;
      if (ls >> key && key == "nodes") ls >> n;
      continue;
    }
    int i = std::stoi(first);
    int j = 0;
    if (!(ls >> j)) throw std::invalid_argument("malformed edge-list line: " + line);
    edges.emplace_back(i, j);
    n = std::max({n, i, j});
  }
  if (n == 0) throw std::invalid_argument("edge list defines no nodes");
  return FleetGraph(n, edges);
}

int Neighbourhood::slot_of(NodeId j) const {
  const auto it = std::lower_bound(members.begin(), members.end(), j);
  if (it == members.end() || *it != j) {
    throw std::invalid_argument("node is not tracked by this neighbourhood");
  }
  return static_cast<int>(it - members.begin());
}

Neighbourhood neighbourhood(const FleetGraph& g, NodeId i) {
  Neighbourhood nb;
  nb.owner = i;
  nb.members = g.neighbours(i);
  nb.members.push_back(i);
  std::sort(nb.members.begin(), nb.members.end());
  return nb;
}

std::vector<NodeId> common_members(const FleetGraph& g, NodeId i, NodeId k) {
  const Neighbourhood vi = neighbourhood(g, i);
  const Neighbourhood vk = neighbourhood(g, k);
  std::vector<NodeId> out;
  std::set_intersection(vi.members.begin(), vi.members.end(), vk.members.begin(),
                        vk.members.end(), std::back_inserter(out));
  return out;
}

}  // namespace dqf
