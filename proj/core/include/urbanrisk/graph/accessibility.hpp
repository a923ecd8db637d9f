#pragma once

#include <optional>
#include <span>
#include <vector>

#include "urbanrisk/graph/network.hpp"
#include "urbanrisk/graph/routing.hpp"

namespace urbanrisk::graph {

struct BuildingAccess {
  double travel_time_s = kUnreachable;  // T to nearest emergency facility
  bool reachable = false;               // R: T within budget
  int redundancy = 0;                   // K to nearest feasible shelter
};

struct AccessibilitySummary {
  std::size_t buildings = 0;
  double reachability_rate = 0.0;
  // Mean T over buildings with a finite travel time; nullopt when there are none.
  std::optional<double> mean_travel_time_s;
  double mean_redundancy = 0.0;
};

struct AccessibilityResult {
  AccessibilitySummary summary;
  std::vector<BuildingAccess> per_building;
};

// T, R and K for every building node. Nodes shared by several buildings are
// evaluated once.
std::vector<BuildingAccess> building_access(const ConditionedNetwork& cn,
                                            std::span<const NodeIndex> building_nodes,
                                            std::span<const NodeIndex> facilities,
                                            std::span<const NodeIndex> shelters,
                                            double budget_s = kDefaultTimeBudgetS);

AccessibilitySummary summarize_access(std::span<const BuildingAccess> access);

AccessibilityResult accessibility_summary(const ConditionedNetwork& cn,
                                          std::span<const NodeIndex> building_nodes,
                                          std::span<const NodeIndex> facilities,
                                          std::span<const NodeIndex> shelters,
                                          double budget_s = kDefaultTimeBudgetS);

struct EnsembleBuildingAccess {
  std::optional<double> mean_travel_time_s;  // over scenarios with a finite T
  double reach_probability = 0.0;
  double mean_redundancy = 0.0;
};

struct EnsembleAccessibility {
  AccessibilitySummary summary;  // scenario-weighted average of per-scenario summaries
  std::vector<EnsembleBuildingAccess> per_building;
};

EnsembleAccessibility ensemble_accessibility(std::span<const ConditionedNetwork> ensemble,
                                             std::span<const double> weights,
                                             std::span<const NodeIndex> building_nodes,
                                             std::span<const NodeIndex> facilities,
                                             std::span<const NodeIndex> shelters,
                                             double budget_s = kDefaultTimeBudgetS);

}  // namespace urbanrisk::graph
