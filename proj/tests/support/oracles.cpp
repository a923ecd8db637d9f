#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

namespace urbanrisk::testing {

std::vector<double> bellman_ford(int num_nodes, std::span<const WeightedArc> arcs, int origin) {
  std::vector<double> d(static_cast<std::size_t>(num_nodes), kInf);
  d[static_cast<std::size_t>(origin)] = 0.0;
  for (int round = 0; round + 1 < num_nodes; ++round) {
    bool changed = false;
    for (const auto& a : arcs) {
      const double via = d[static_cast<std::size_t>(a.from)] + a.weight;
      if (via < d[static_cast<std::size_t>(a.to)]) {
        d[static_cast<std::size_t>(a.to)] = via;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return d;
}

std::vector<WeightedArc> retained_arcs(const graph::ConditionedNetwork& cn) {
  std::vector<WeightedArc> out;
  const auto& net = cn.base();
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const auto& st = cn.states()[e];
    if (st.removed) continue;
    const auto& edge = net.edges()[e];
    out.push_back({edge.from, edge.to, edge.travel_time_s * st.multiplier});
  }
  return out;
}

double bf_travel_time(const graph::ConditionedNetwork& cn, int origin, std::span<const graph::NodeIndex> dests) {
  const auto arcs = retained_arcs(cn);
  const auto d = bellman_ford(static_cast<int>(cn.base().num_nodes()), arcs, origin);
  double best = kInf;
  for (auto t : dests) best = std::min(best, d[static_cast<std::size_t>(t)]);
  return best;
}

std::vector<PlainArc> retained_plain_arcs(const graph::ConditionedNetwork& cn) {
  std::vector<PlainArc> out;
  const auto& net = cn.base();
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    if (cn.states()[e].removed) continue;
    out.push_back({net.edges()[e].from, net.edges()[e].to});
  }
  return out;
}

int exhaustive_disjoint_paths(int num_nodes, std::span<const PlainArc> arcs, int source, int sink) {
  std::vector<std::uint32_t> paths;
  std::vector<bool> on_path(static_cast<std::size_t>(num_nodes), false);
  std::function<void(int, std::uint32_t)> walk = [&](int u, std::uint32_t used) {
    if (u == sink) {
      paths.push_back(used);
      return;
    }
    on_path[static_cast<std::size_t>(u)] = true;
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      if (arcs[i].from != u || on_path[static_cast<std::size_t>(arcs[i].to)]) continue;
      walk(arcs[i].to, used | (1u << i));
    }
    on_path[static_cast<std::size_t>(u)] = false;
  };
  walk(source, 0);

  int best = 0;
  std::function<void(std::size_t, std::uint32_t, int)> pack = [&](std::size_t i, std::uint32_t used, int count) {
    best = std::max(best, count);
    for (std::size_t j = i; j < paths.size(); ++j) {
      if ((paths[j] & used) == 0) pack(j + 1, used | paths[j], count + 1);
    }
  };
  pack(0, 0, 0);
  return best;
}

int edmonds_karp(int num_nodes, std::span<const PlainArc> arcs, int source, int sink) {
  const auto n = static_cast<std::size_t>(num_nodes);
  std::vector<std::vector<int>> cap(n, std::vector<int>(n, 0));
  for (const auto& a : arcs) cap[static_cast<std::size_t>(a.from)][static_cast<std::size_t>(a.to)] += 1;
  int flow = 0;
  while (true) {
    std::vector<int> parent(n, -1);
    parent[static_cast<std::size_t>(source)] = source;
    std::deque<int> queue{source};
    while (!queue.empty() && parent[static_cast<std::size_t>(sink)] < 0) {
      const int u = queue.front();
      queue.pop_front();
      for (std::size_t v = 0; v < n; ++v) {
        if (parent[v] < 0 && cap[static_cast<std::size_t>(u)][v] > 0) {
          parent[v] = u;
          queue.push_back(static_cast<int>(v));
        }
      }
    }
    if (parent[static_cast<std::size_t>(sink)] < 0) return flow;
    for (int v = sink; v != source; v = parent[static_cast<std::size_t>(v)]) {
      const int u = parent[static_cast<std::size_t>(v)];
      cap[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] -= 1;
      cap[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] += 1;
    }
    ++flow;
  }
}

Eigen::MatrixXd GaussianEpsOracle::predict_eps(const Eigen::MatrixXd& x_t, std::span<const int> steps,
                                               const Eigen::MatrixXd&) const {
  Eigen::MatrixXd out(x_t.rows(), x_t.cols());
  for (Eigen::Index j = 0; j < x_t.cols(); ++j) {
    const double ab = schedule_.alpha_bar(steps[static_cast<std::size_t>(j)]);
    const double denom = ab * var_ + 1.0 - ab;
    for (Eigen::Index i = 0; i < x_t.rows(); ++i) {
      out(i, j) = std::sqrt(1.0 - ab) * (x_t(i, j) - std::sqrt(ab) * mu_) / denom;
    }
  }
  return out;
}

Moments moments(std::span<const double> xs) {
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (double x : xs) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= static_cast<double>(xs.size());
  return m;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                             static_cast<double>(j) / static_cast<double>(b.size())));
  }
  return d;
}

}  // namespace urbanrisk::testing
