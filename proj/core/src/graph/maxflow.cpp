#include "urbanrisk/graph/maxflow.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/graph/routing.hpp"

namespace urbanrisk::graph {
namespace {

class UnitFlowGraph {
 public:
  explicit UnitFlowGraph(std::size_t n) : adj_(n), level_(n), iter_(n) {}

  void add_arc(int from, int to) {
    adj_[static_cast<std::size_t>(from)].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({to, 1});
    adj_[static_cast<std::size_t>(to)].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({from, 0});
  }

  int max_flow(int s, int t) {
    int flow = 0;
    while (bfs(s, t)) {
      std::fill(iter_.begin(), iter_.end(), 0);
      while (int f = dfs(s, t, std::numeric_limits<int>::max())) flow += f;
    }
    return flow;
  }

 private:
  struct Residual {
    int to;
    int cap;
  };

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[static_cast<std::size_t>(s)] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int id : adj_[static_cast<std::size_t>(u)]) {
        const auto& a = arcs_[static_cast<std::size_t>(id)];
        if (a.cap > 0 && level_[static_cast<std::size_t>(a.to)] < 0) {
          level_[static_cast<std::size_t>(a.to)] = level_[static_cast<std::size_t>(u)] + 1;
          q.push(a.to);
        }
      }
    }
    return level_[static_cast<std::size_t>(t)] >= 0;
  }

  int dfs(int u, int t, int pushed) {
    if (u == t) return pushed;
    auto& it = iter_[static_cast<std::size_t>(u)];
    const auto& out = adj_[static_cast<std::size_t>(u)];
    for (; it < static_cast<int>(out.size()); ++it) {
      const int id = out[static_cast<std::size_t>(it)];
      auto& a = arcs_[static_cast<std::size_t>(id)];
      if (a.cap <= 0 ||
          level_[static_cast<std::size_t>(a.to)] != level_[static_cast<std::size_t>(u)] + 1) {
        continue;
      }
      if (int f = dfs(a.to, t, std::min(pushed, a.cap)); f > 0) {
        a.cap -= f;
        arcs_[static_cast<std::size_t>(id ^ 1)].cap += f;
        return f;
      }
    }
    return 0;
  }

  std::vector<std::vector<int>> adj_;
  std::vector<Residual> arcs_;
  std::vector<int> level_;
  std::vector<int> iter_;
};

}  // namespace

int max_edge_disjoint_paths(std::size_t num_nodes, std::span<const Arc> arcs, NodeIndex source,
                            NodeIndex sink) {
  auto in_range = [&](NodeIndex n) { return n >= 0 && static_cast<std::size_t>(n) < num_nodes; };
  if (!in_range(source) || !in_range(sink)) throw ArgumentError("flow endpoint out of range");
  if (source == sink) throw ArgumentError("source and sink must differ");
  UnitFlowGraph g(num_nodes);
  for (const auto& a : arcs) {
    if (!in_range(a.from) || !in_range(a.to)) throw ArgumentError("arc endpoint out of range");
    g.add_arc(a.from, a.to);
  }
  return g.max_flow(source, sink);
}

int evacuation_redundancy(const ConditionedNetwork& cn, NodeIndex building, NodeIndex shelter) {
  const auto& net = cn.base();
  const auto n = static_cast<NodeIndex>(net.num_nodes());
  if (shelter < 0 || shelter >= n) throw ArgumentError("shelter node absent from network");
  if (building < 0 || building >= n) throw ArgumentError("building node absent from network");
  if (building == shelter) throw ArgumentError("building and shelter must differ");
  std::vector<Arc> arcs;
  arcs.reserve(net.num_edges());
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    if (!cn.retained(static_cast<EdgeIndex>(e))) continue;
    const auto& edge = net.edges()[e];
    arcs.push_back({edge.from, edge.to});
  }
  return max_edge_disjoint_paths(net.num_nodes(), arcs, building, shelter);
}

std::optional<NodeIndex> nearest_feasible_shelter(const ConditionedNetwork& cn, NodeIndex building,
                                                  std::span<const NodeIndex> shelters) {
  std::vector<NodeIndex> others;
  for (auto s : shelters) {
    if (s != building) others.push_back(s);
  }
  if (others.empty()) return std::nullopt;
  auto tt = hazard_travel_time(cn, building, others);
  return tt.destination;
}

int redundancy_to_nearest_shelter(const ConditionedNetwork& cn, NodeIndex building,
                                  std::span<const NodeIndex> shelters) {
  auto shelter = nearest_feasible_shelter(cn, building, shelters);
  if (!shelter) return 0;
  return evacuation_redundancy(cn, building, *shelter);
}

}  // namespace urbanrisk::graph
