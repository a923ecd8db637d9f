#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanrisk/data/records.hpp"
#include "urbanrisk/graph/network.hpp"
#include "urbanrisk/graph/weight_layer.hpp"

namespace urbanrisk::service {

inline constexpr int kRiskLayerSchemaVersion = 1;
inline constexpr double kDefaultCadenceS = 900.0;

struct ZoneSummary {
  std::string zone_id;
  std::size_t buildings = 0;
  double reachability_rate = 0.0;
  std::optional<double> mean_travel_time_s;
  double mean_redundancy = 0.0;
  bool operator==(const ZoneSummary&) const = default;
};

/// Published routing layer: per-edge multipliers plus per-zone access
/// summaries. checksum covers everything except the version, so a reader can
/// tell a complete document from a mixed one.
struct RiskLayer {
  std::uint64_t version = 0;  // assigned by the store
  std::string generated_at;
  double cadence_s = kDefaultCadenceS;
  graph::WeightLayer weights;
  std::vector<ZoneSummary> zones;  // sorted by zone id
  std::uint64_t checksum = 0;

  std::uint64_t compute_checksum() const;
  void seal() { checksum = compute_checksum(); }
  bool consistent() const { return checksum == compute_checksum(); }
};

struct ZoneSpec {
  geo::LatLon origin;  // projection anchor, usually the city centre
  double zone_km = 1.0;
};

/// Weight layer of cn plus zone summaries from T, R and K of every building
/// (zones are zone_km grid cells). The result is sealed.
RiskLayer build_risk_layer(const graph::ConditionedNetwork& cn,
                           std::span<const data::BuildingRecord> records,
                           const graph::ServicePoints& services, const ZoneSpec& zones,
                           double budget_s, std::string generated_at,
                           double cadence_s = kDefaultCadenceS);

// Recomputes the zone summaries from the embedded weights; returns mismatching zone ids.
std::vector<std::string> verify_zones(const RiskLayer& layer,
                                      std::shared_ptr<const graph::RoadNetwork> base,
                                      std::span<const data::BuildingRecord> records,
                                      const graph::ServicePoints& services, const ZoneSpec& zones,
                                      double budget_s);

nlohmann::json risk_layer_to_json(const RiskLayer& layer);
RiskLayer risk_layer_from_json(const nlohmann::json& j);  // throws FormatError

}  // namespace urbanrisk::service
