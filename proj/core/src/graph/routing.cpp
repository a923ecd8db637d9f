#include "urbanrisk/graph/routing.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <utility>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::graph {
namespace {

using QueueEntry = std::pair<double, NodeIndex>;
using MinQueue = std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>>;

void check_node(const RoadNetwork& net, NodeIndex n, const char* what) {
  if (n < 0 || static_cast<std::size_t>(n) >= net.num_nodes()) {
    throw ArgumentError(std::string(what) + " node index out of range");
  }
}

}  // namespace

std::vector<double> shortest_costs_from(const ConditionedNetwork& cn, NodeIndex origin) {
  const auto& net = cn.base();
  check_node(net, origin, "origin");
  std::vector<double> dist(net.num_nodes(), kUnreachable);
  MinQueue queue;
  dist[static_cast<std::size_t>(origin)] = 0.0;
  queue.emplace(0.0, origin);
  while (!queue.empty()) {
    auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (auto e : net.out_edges(u)) {
      if (!cn.retained(e)) continue;
      const auto v = net.edge(e).to;
      const double nd = d + cn.weight(e);
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        queue.emplace(nd, v);
      }
    }
  }
  return dist;
}

std::vector<double> costs_to_nearest(const ConditionedNetwork& cn,
                                     std::span<const NodeIndex> destinations) {
  const auto& net = cn.base();
  std::vector<double> dist(net.num_nodes(), kUnreachable);
  MinQueue queue;
  for (auto d : destinations) {
    check_node(net, d, "destination");
    dist[static_cast<std::size_t>(d)] = 0.0;
    queue.emplace(0.0, d);
  }
  while (!queue.empty()) {
    auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(v)]) continue;
    for (auto e : net.in_edges(v)) {
      if (!cn.retained(e)) continue;
      const auto u = net.edge(e).from;
      const double nd = d + cn.weight(e);
      if (nd < dist[static_cast<std::size_t>(u)]) {
        dist[static_cast<std::size_t>(u)] = nd;
        queue.emplace(nd, u);
      }
    }
  }
  return dist;
}

TravelTimeResult hazard_travel_time(const ConditionedNetwork& cn, NodeIndex origin,
                                    std::span<const NodeIndex> destinations) {
  if (destinations.empty()) throw ArgumentError("hazard_travel_time: empty destination set");
  const auto& net = cn.base();
  const auto dist = shortest_costs_from(cn, origin);

  TravelTimeResult result;
  for (auto d : destinations) {
    check_node(net, d, "destination");
    const double c = dist[static_cast<std::size_t>(d)];
    if (c == kUnreachable) continue;
    if (!result.destination || c < result.seconds ||
        (c == result.seconds && net.node(d).id < net.node(*result.destination).id)) {
      result.seconds = c;
      result.destination = d;
    }
  }
  if (!result.destination) return result;

  // Nodes that reach the destination through tight (shortest-path) edges.
  const auto target = *result.destination;
  std::vector<char> on_dag(net.num_nodes(), 0);
  std::vector<NodeIndex> stack{target};
  on_dag[static_cast<std::size_t>(target)] = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto e : net.in_edges(v)) {
      if (!cn.retained(e)) continue;
      const auto u = net.edge(e).from;
      if (on_dag[static_cast<std::size_t>(u)]) continue;
      if (dist[static_cast<std::size_t>(u)] + cn.weight(e) == dist[static_cast<std::size_t>(v)]) {
        on_dag[static_cast<std::size_t>(u)] = 1;
        stack.push_back(u);
      }
    }
  }

  // Greedy walk: smallest next id that stays on a shortest path to the target.
  auto current = origin;
  result.path.push_back(current);
  while (current != target) {
    std::optional<NodeIndex> next;
    for (auto e : net.out_edges(current)) {
      if (!cn.retained(e)) continue;
      const auto v = net.edge(e).to;
      if (!on_dag[static_cast<std::size_t>(v)]) continue;
      if (dist[static_cast<std::size_t>(current)] + cn.weight(e) != dist[static_cast<std::size_t>(v)]) {
        continue;
      }
      if (!next || net.node(v).id < net.node(*next).id) next = v;
    }
    // Zero-weight cycles are impossible (weights > 0), so the walk terminates.
    current = *next;
    result.path.push_back(current);
  }
  return result;
}

bool reachability(const ConditionedNetwork& cn, NodeIndex building,
                  std::span<const NodeIndex> facilities, double budget_s) {
  if (!(budget_s > 0.0)) throw ArgumentError("time budget must be positive");
  return within_budget(hazard_travel_time(cn, building, facilities).seconds, budget_s);
}

double reachability_probability(std::span<const ConditionedNetwork> ensemble,
                                std::span<const double> weights, NodeIndex building,
                                std::span<const NodeIndex> facilities, double budget_s) {
  if (ensemble.empty()) throw ArgumentError("empty scenario ensemble");
  if (!weights.empty() && weights.size() != ensemble.size()) {
    throw ArgumentError("ensemble weight count mismatch");
  }
  double total = 0.0, hit = 0.0;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    total += w;
    if (reachability(ensemble[i], building, facilities, budget_s)) hit += w;
  }
  if (!(total > 0.0)) throw ArgumentError("ensemble weights sum to zero");
  return hit / total;
}

std::vector<double> ensemble_weights(std::span<const HazardScenario> scenarios) {
  std::vector<double> w(scenarios.size(), 1.0);
  const bool all_set = std::all_of(scenarios.begin(), scenarios.end(),
                                   [](const auto& s) { return s.probability.has_value(); });
  if (all_set) {
    for (std::size_t i = 0; i < scenarios.size(); ++i) w[i] = *scenarios[i].probability;
  }
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0)) throw ArgumentError("scenario probabilities sum to zero");
  for (double& x : w) x /= total;
  return w;
}

}  // namespace urbanrisk::graph
