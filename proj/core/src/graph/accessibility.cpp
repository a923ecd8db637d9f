#include "urbanrisk/graph/accessibility.hpp"

#include <cmath>
#include <unordered_map>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/graph/maxflow.hpp"

namespace urbanrisk::graph {

std::vector<BuildingAccess> building_access(const ConditionedNetwork& cn,
                                            std::span<const NodeIndex> building_nodes,
                                            std::span<const NodeIndex> facilities,
                                            std::span<const NodeIndex> shelters,
                                            double budget_s) {
  if (!(budget_s > 0.0)) throw ArgumentError("time budget must be positive");
  if (facilities.empty()) throw ArgumentError("no emergency facilities given");
  std::unordered_map<NodeIndex, BuildingAccess> cache;
  std::vector<BuildingAccess> out;
  out.reserve(building_nodes.size());
  for (auto node : building_nodes) {
    auto it = cache.find(node);
    if (it == cache.end()) {
      BuildingAccess a;
      a.travel_time_s = hazard_travel_time(cn, node, facilities).seconds;
      a.reachable = within_budget(a.travel_time_s, budget_s);
      a.redundancy = shelters.empty() ? 0 : redundancy_to_nearest_shelter(cn, node, shelters);
      it = cache.emplace(node, a).first;
    }
    out.push_back(it->second);
  }
  return out;
}

AccessibilitySummary summarize_access(std::span<const BuildingAccess> access) {
  if (access.empty()) throw ArgumentError("accessibility summary requires at least one building");
  AccessibilitySummary s;
  s.buildings = access.size();
  double reach = 0.0, t_sum = 0.0, k_sum = 0.0;
  std::size_t finite = 0;
  for (const auto& a : access) {
    if (a.reachable) reach += 1.0;
    if (std::isfinite(a.travel_time_s)) {
      t_sum += a.travel_time_s;
      ++finite;
    }
    k_sum += a.redundancy;
  }
  const double n = static_cast<double>(access.size());
  s.reachability_rate = reach / n;
  if (finite > 0) s.mean_travel_time_s = t_sum / static_cast<double>(finite);
  s.mean_redundancy = k_sum / n;
  return s;
}

AccessibilityResult accessibility_summary(const ConditionedNetwork& cn,
                                          std::span<const NodeIndex> building_nodes,
                                          std::span<const NodeIndex> facilities,
                                          std::span<const NodeIndex> shelters, double budget_s) {
  AccessibilityResult r;
  r.per_building = building_access(cn, building_nodes, facilities, shelters, budget_s);
  r.summary = summarize_access(r.per_building);
  return r;
}

EnsembleAccessibility ensemble_accessibility(std::span<const ConditionedNetwork> ensemble,
                                             std::span<const double> weights,
                                             std::span<const NodeIndex> building_nodes,
                                             std::span<const NodeIndex> facilities,
                                             std::span<const NodeIndex> shelters,
                                             double budget_s) {
  if (ensemble.empty()) throw ArgumentError("empty scenario ensemble");
  if (!weights.empty() && weights.size() != ensemble.size()) {
    throw ArgumentError("ensemble weight count mismatch");
  }
  std::vector<double> w(ensemble.size(), 1.0 / static_cast<double>(ensemble.size()));
  if (!weights.empty()) {
    double total = 0.0;
    for (double x : weights) total += x;
    if (!(total > 0.0)) throw ArgumentError("ensemble weights sum to zero");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = weights[i] / total;
  }

  EnsembleAccessibility out;
  const std::size_t nb = building_nodes.size();
  out.per_building.resize(nb);
  std::vector<double> t_sum(nb, 0.0), t_w(nb, 0.0);
  double rate = 0.0, k = 0.0, mean_t = 0.0, mean_t_w = 0.0;

  for (std::size_t s = 0; s < ensemble.size(); ++s) {
    auto res = accessibility_summary(ensemble[s], building_nodes, facilities, shelters, budget_s);
    rate += w[s] * res.summary.reachability_rate;
    k += w[s] * res.summary.mean_redundancy;
    if (res.summary.mean_travel_time_s) {
      mean_t += w[s] * *res.summary.mean_travel_time_s;
      mean_t_w += w[s];
    }
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& a = res.per_building[b];
      auto& e = out.per_building[b];
      if (a.reachable) e.reach_probability += w[s];
      e.mean_redundancy += w[s] * a.redundancy;
      if (std::isfinite(a.travel_time_s)) {
        t_sum[b] += w[s] * a.travel_time_s;
        t_w[b] += w[s];
      }
    }
  }
  for (std::size_t b = 0; b < nb; ++b) {
    if (t_w[b] > 0.0) out.per_building[b].mean_travel_time_s = t_sum[b] / t_w[b];
  }
  out.summary.buildings = nb;
  out.summary.reachability_rate = rate;
  out.summary.mean_redundancy = k;
  if (mean_t_w > 0.0) out.summary.mean_travel_time_s = mean_t / mean_t_w;
  return out;
}

}  // namespace urbanrisk::graph
