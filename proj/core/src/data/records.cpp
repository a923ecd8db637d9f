#include "urbanrisk/data/records.hpp"

#include <cmath>
#include <string>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::data {

std::string_view group_name(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::kGeo: return "geo";
    case FeatureGroup::kStruct: return "struct";
    case FeatureGroup::kDemo: return "demo";
    case FeatureGroup::kInfra: return "infra";
    case FeatureGroup::kClimate: return "climate";
    case FeatureGroup::kTransport: return "transport";
  }
  return "unknown";
}

std::optional<FeatureGroup> parse_group(std::string_view name) {
  for (auto g : kAllFeatureGroups) {
    if (group_name(g) == name) return g;
  }
  return std::nullopt;
}

void TargetVector::sanitize() {
  for (double v : to_array()) {
    if (!std::isfinite(v)) throw ArgumentError("target component is not finite");
  }
  if (flood_depth < 0.0) flood_depth = 0.0;
  if (structural_vulnerability < 0.0) structural_vulnerability = 0.0;
  if (structural_vulnerability > 100.0) structural_vulnerability = 100.0;
  if (accessibility_score < 0.0) accessibility_score = 0.0;
  if (accessibility_score > 1.0) accessibility_score = 1.0;
}

std::optional<double> BuildingRecord::find(FeatureGroup g, std::string_view name) const {
  if (is_missing(g)) return std::nullopt;
  const auto& m = group(g);
  auto it = m.find(name);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

double BuildingRecord::get(FeatureGroup g, std::string_view name) const {
  auto v = find(g, name);
  if (!v) {
    throw ArgumentError("record " + id + ": feature " + feature_key(g, name) +
                        " is missing");
  }
  return *v;
}

void BuildingRecord::set(FeatureGroup g, std::string_view name, double value) {
  auto& m = group(g);
  auto it = m.find(name);
  if (it == m.end()) {
    m.emplace(std::string(name), value);
  } else {
    it->second = value;
  }
}

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(int year, unsigned month, unsigned day) {
  const int y = year - (month <= 2 ? 1 : 0);
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::optional<std::int64_t> BuildingRecord::day_index() const {
  if (!day_of_year || *day_of_year < 1 || *day_of_year > 366) return std::nullopt;
  return days_from_civil(year, 1, 1) + (*day_of_year - 1);
}

void BuildingRecord::validate() const {
  if (id.empty()) throw ArgumentError("record has empty id");
  if (!geo::valid_coordinates(position())) {
    throw ArgumentError("record " + id + ": coordinates missing or out of range");
  }
  if (!std::isfinite(elevation)) throw ArgumentError("record " + id + ": elevation not finite");
  for (auto g : kAllFeatureGroups) {
    if (is_missing(g)) continue;
    for (const auto& [name, v] : group(g)) {
      if (!std::isfinite(v)) {
        throw ArgumentError("record " + id + ": feature " + feature_key(g, name) +
                            " not finite");
      }
    }
  }
  for (double v : targets.to_array()) {
    if (!std::isfinite(v)) throw ArgumentError("record " + id + ": target not finite");
  }
  if (targets.flood_depth < 0.0) throw ArgumentError("record " + id + ": negative flood depth");
  if (targets.structural_vulnerability < 0.0 || targets.structural_vulnerability > 100.0) {
    throw ArgumentError("record " + id + ": structural vulnerability outside [0,100]");
  }
  if (targets.accessibility_score < 0.0 || targets.accessibility_score > 1.0) {
    throw ArgumentError("record " + id + ": accessibility score outside [0,1]");
  }
}

std::string feature_key(FeatureGroup g, std::string_view name) {
  std::string key(group_name(g));
  key += '.';
  key += name;
  return key;
}

const AffineStat& NormalizationStats::feature(FeatureGroup g, std::string_view name) const {
  auto it = features.find(feature_key(g, name));
  if (it == features.end()) {
    throw ArgumentError("no normalization statistics for " + feature_key(g, name));
  }
  return it->second;
}

}  // namespace urbanrisk::data
