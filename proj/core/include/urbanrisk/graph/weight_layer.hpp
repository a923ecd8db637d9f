#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanrisk/graph/network.hpp"

namespace urbanrisk::graph {

inline constexpr int kWeightLayerSchemaVersion = 1;

struct WeightEntry {
  std::string edge_id;
  geo::LatLon from;
  geo::LatLon to;
  std::optional<double> multiplier;  // nullopt => removed
  double capacity_delta = 0.0;

  bool removed() const { return !multiplier.has_value(); }
  bool operator==(const WeightEntry&) const = default;
};

/// Routing-consumable per-edge weight multipliers for one conditioned network.
struct WeightLayer {
  std::string scenario_id;
  std::string policy_id;
  std::string generated_at;  // ISO-8601 timestamp supplied by the caller
  std::vector<WeightEntry> entries;

  bool operator==(const WeightLayer&) const = default;
};

WeightLayer make_weight_layer(const ConditionedNetwork& cn, std::string generated_at);

// GeoJSON FeatureCollection, one LineString feature per edge.
nlohmann::json to_geojson(const WeightLayer& layer);
WeightLayer weight_layer_from_geojson(const nlohmann::json& doc);  // throws FormatError

std::string export_weight_layer(const ConditionedNetwork& cn, const std::string& generated_at);

// Rebuilds the conditioned network a layer describes. Every base edge must appear.
ConditionedNetwork apply_weight_layer(std::shared_ptr<const RoadNetwork> base,
                                      const WeightLayer& layer);

}  // namespace urbanrisk::graph
