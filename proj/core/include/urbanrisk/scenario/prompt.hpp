#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanrisk/data/records.hpp"

namespace urbanrisk::scenario {

enum class InterventionKind { kGreenInfrastructure, kBuildingRetrofit, kTransportationUpgrade };

std::string_view kind_name(InterventionKind k);
std::optional<InterventionKind> parse_kind(std::string_view s);

// Closed intervals for each edit parameter.
inline constexpr double kMaxImperviousnessDelta = 0.2;
inline constexpr double kMaxDrainageDelta = 0.3;
inline constexpr double kMaxStructuralDelta = 15.0;  // points on the 0-100 scale
inline constexpr double kMaxCapacityDelta = 0.5;

// Exposure multiplier for a drainage upgrade: 1 - 0.6 * delta_drain.
double flood_multiplier(double delta_drain);
// Damage-probability multiplier for a retrofit: exp(-0.02 * delta_str).
double damage_multiplier(double delta_str);
// Inflation multiplier for a road upgrade: 1 - 0.5 * delta_cap.
double road_multiplier(double delta_cap);

struct Deltas {
  double imperviousness = 0.0;
  double drainage = 0.0;
  double structural = 0.0;
  double capacity = 0.0;
  bool operator==(const Deltas&) const = default;
};

struct BoundingBox {
  double min_lat = 0.0;
  double min_lon = 0.0;
  double max_lat = 0.0;
  double max_lon = 0.0;
  bool contains(geo::LatLon p) const {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
  bool operator==(const BoundingBox&) const = default;
};

/// Which buildings and edges a prompt touches. Absent criteria match
/// everything; present criteria must all match. Edges default to every
/// evacuation edge.
struct TargetSelector {
  std::optional<std::vector<std::string>> building_ids;  // matched against building_id or id
  std::optional<std::vector<std::string>> edge_ids;
  std::optional<BoundingBox> bbox;  // applies to building positions only

  bool matches(const data::BuildingRecord& r) const;
  bool selects_all_buildings() const { return !building_ids && !bbox; }
  bool operator==(const TargetSelector&) const = default;
};

struct InterventionPrompt {
  std::string id;
  InterventionKind kind = InterventionKind::kGreenInfrastructure;
  Deltas deltas;
  TargetSelector selector;
  std::string label;

  // Throws ValidationError listing every offending field.
  void validate() const;
  bool is_identity() const { return deltas == Deltas{}; }
  bool edits_buildings() const { return kind != InterventionKind::kTransportationUpgrade; }
  bool edits_network() const { return kind == InterventionKind::kTransportationUpgrade; }
  bool operator==(const InterventionPrompt&) const = default;
};

// All deltas scaled by factor and clamped into range; id gets a suffix.
InterventionPrompt scaled_prompt(const InterventionPrompt& p, double factor);

nlohmann::json prompt_to_json(const InterventionPrompt& p);
// Validates while parsing; throws ValidationError with field-level messages.
InterventionPrompt prompt_from_json(const nlohmann::json& j);

}  // namespace urbanrisk::scenario
