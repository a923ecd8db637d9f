#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "urbanrisk/graph/network.hpp"

namespace urbanrisk::graph {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// Default emergency time budget: 15 minutes.
inline constexpr double kDefaultTimeBudgetS = 900.0;

struct TravelTimeResult {
  double seconds = kUnreachable;
  std::optional<NodeIndex> destination;
  std::vector<NodeIndex> path;  // origin ... destination; empty if unreachable

  bool reachable() const { return destination.has_value(); }
};

/// Shortest hazard-conditioned travel time from origin to the closest of the
/// destinations, over retained edges weighted by free-flow time x multiplier.
/// Equal-cost destinations resolve to the smallest node id; equal-cost paths
/// resolve to the lexicographically smallest node-id sequence.
TravelTimeResult hazard_travel_time(const ConditionedNetwork& cn, NodeIndex origin,
                                    std::span<const NodeIndex> destinations);

// Single-source costs to every node (forward Dijkstra).
std::vector<double> shortest_costs_from(const ConditionedNetwork& cn, NodeIndex origin);

// Cost from every node to its nearest destination (reverse multi-source Dijkstra).
// Sums accumulate destination-outward, so values can differ from forward costs
// in the last ulp.
std::vector<double> costs_to_nearest(const ConditionedNetwork& cn,
                                     std::span<const NodeIndex> destinations);

inline bool within_budget(double travel_time_s, double budget_s) {
  return travel_time_s <= budget_s;
}

bool reachability(const ConditionedNetwork& cn, NodeIndex building,
                  std::span<const NodeIndex> facilities, double budget_s = kDefaultTimeBudgetS);

/// Probability-weighted fraction of scenarios in which a facility is reachable
/// within the budget. Uniform weights when weights is empty.
double reachability_probability(std::span<const ConditionedNetwork> ensemble,
                                std::span<const double> weights, NodeIndex building,
                                std::span<const NodeIndex> facilities,
                                double budget_s = kDefaultTimeBudgetS);

// Normalized ensemble weights from scenario probabilities (uniform if any is unset).
std::vector<double> ensemble_weights(std::span<const HazardScenario> scenarios);

}  // namespace urbanrisk::graph
