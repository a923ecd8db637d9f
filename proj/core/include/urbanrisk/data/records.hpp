#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "urbanrisk/geo.hpp"

namespace urbanrisk::data {

enum class FeatureGroup : int { kGeo = 0, kStruct, kDemo, kInfra, kClimate, kTransport };

inline constexpr std::size_t kNumFeatureGroups = 6;
inline constexpr std::array<FeatureGroup, kNumFeatureGroups> kAllFeatureGroups = {
    FeatureGroup::kGeo,   FeatureGroup::kStruct,  FeatureGroup::kDemo,
    FeatureGroup::kInfra, FeatureGroup::kClimate, FeatureGroup::kTransport};

std::string_view group_name(FeatureGroup g);
std::optional<FeatureGroup> parse_group(std::string_view name);

// Feature names used by the edit rules, the encoders and the synthetic generator.
namespace feature {
inline constexpr std::string_view kSlope = "slope";
inline constexpr std::string_view kDistWater = "dist_water_m";
inline constexpr std::string_view kGreenCover = "green_cover";
inline constexpr std::string_view kStructuralScore = "structural_score";
inline constexpr std::string_view kAgeYears = "age_years";
inline constexpr std::string_view kFloors = "floors";
inline constexpr std::string_view kDamageProbability = "damage_probability";
inline constexpr std::string_view kIncomeQuintile = "income_quintile";
inline constexpr std::string_view kPopulationDensity = "population_density";
inline constexpr std::string_view kHomeownership = "homeownership_rate";
inline constexpr std::string_view kImperviousness = "imperviousness";
inline constexpr std::string_view kDrainageCapacity = "drainage_capacity";
inline constexpr std::string_view kDistHospital = "dist_hospital_m";
inline constexpr std::string_view kAnnualPrecip = "annual_precip_mm";
inline constexpr std::string_view kSummerTmax = "summer_tmax_c";
inline constexpr std::string_view kHeatwaveDays = "heatwave_days";
inline constexpr std::string_view kFloodHistory = "flood_events_5y";
inline constexpr std::string_view kHazardTravelTime = "hazard_travel_time_s";
inline constexpr std::string_view kReachable = "reachable";
inline constexpr std::string_view kRedundancy = "redundancy";
inline constexpr std::string_view kNodeDegree = "node_degree";
}  // namespace feature

using FeatureMap = std::map<std::string, double, std::less<>>;

struct TargetVector {
  static constexpr std::size_t kSize = 4;

  double flood_depth = 0.0;               // meters, >= 0
  double heat_stress = 0.0;               // degC-scale index
  double structural_vulnerability = 0.0;  // [0, 100]
  double accessibility_score = 0.0;       // [0, 1]

  std::array<double, kSize> to_array() const {
    return {flood_depth, heat_stress, structural_vulnerability, accessibility_score};
  }
  static TargetVector from_array(const std::array<double, kSize>& a) {
    return {a[0], a[1], a[2], a[3]};
  }
  // Clamps bounded components into range; throws ArgumentError on non-finite values.
  void sanitize();

  bool operator==(const TargetVector&) const = default;
};

inline constexpr std::array<std::string_view, TargetVector::kSize> kTargetNames = {
    "flood_depth", "heat_stress", "structural_vulnerability", "accessibility_score"};

struct BuildingRecord {
  std::string id;
  std::string building_id;  // stable across years
  std::string city_id;
  double lat = 0.0;
  double lon = 0.0;
  double elevation = 0.0;
  int year = 0;
  std::optional<int> day_of_year;  // missing => no usable timestamp
  std::array<FeatureMap, kNumFeatureGroups> features;
  std::array<bool, kNumFeatureGroups> missing{};
  TargetVector targets;
  std::vector<std::string> hazard_events;  // sorted annotation ids
  std::string node_attachment;

  geo::LatLon position() const { return {lat, lon}; }

  const FeatureMap& group(FeatureGroup g) const { return features[static_cast<int>(g)]; }
  FeatureMap& group(FeatureGroup g) { return features[static_cast<int>(g)]; }
  bool is_missing(FeatureGroup g) const { return missing[static_cast<int>(g)]; }

  std::optional<double> find(FeatureGroup g, std::string_view name) const;
  // Throws ArgumentError if the group is masked or the feature is absent.
  double get(FeatureGroup g, std::string_view name) const;
  void set(FeatureGroup g, std::string_view name, double value);

  // Days since 1970-01-01; nullopt when the timestamp is incomplete.
  std::optional<std::int64_t> day_index() const;

  // Throws ArgumentError describing the first violated invariant.
  void validate() const;

  bool operator==(const BuildingRecord&) const = default;
};

std::int64_t days_from_civil(int year, unsigned month, unsigned day);

inline constexpr std::array<int, 5> kDefaultHorizons = {1, 3, 5, 7, 10};

struct AffineStat {
  double mean = 0.0;
  double scale = 1.0;
  bool zero_variance = false;

  double apply(double x) const { return (x - mean) / scale; }
  double invert(double z) const { return z * scale + mean; }
};

struct NormalizationStats {
  std::map<std::string, AffineStat, std::less<>> features;  // key "group.name"
  AffineStat elevation;
  std::array<AffineStat, TargetVector::kSize> targets;
  std::vector<std::string> zero_variance;  // keys flagged during fitting

  const AffineStat& feature(FeatureGroup g, std::string_view name) const;
};

std::string feature_key(FeatureGroup g, std::string_view name);

struct CityDataset {
  std::string city_id;
  std::vector<BuildingRecord> records;
  std::vector<int> horizons{kDefaultHorizons.begin(), kDefaultHorizons.end()};
  std::optional<NormalizationStats> normalization;
};

}  // namespace urbanrisk::data
