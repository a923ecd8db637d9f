#include "urbanrisk/service/risk_layer.hpp"

#include <bit>
#include <cmath>
#include <map>

#include "urbanrisk/diffusion/forecaster.hpp"
#include "urbanrisk/errors.hpp"
#include "urbanrisk/graph/accessibility.hpp"
#include "urbanrisk/random.hpp"

namespace urbanrisk::service {

using nlohmann::json;

namespace {

void put(std::string& buf, std::string_view s) {
  buf.append(s);
  buf.push_back('\x1f');
}
void put(std::string& buf, double v) { put(buf, std::to_string(std::bit_cast<std::uint64_t>(v))); }

std::string zone_of(const geo::LocalProjection& proj, geo::LatLon p, double zone_km) {
  const auto xy = proj.to_local(p);
  const double size = zone_km * 1000.0;
  return "z" + std::to_string(static_cast<long long>(std::floor(xy.x / size))) + "_" +
         std::to_string(static_cast<long long>(std::floor(xy.y / size)));
}

std::vector<ZoneSummary> zone_summaries(const graph::ConditionedNetwork& cn,
                                        std::span<const data::BuildingRecord> records,
                                        const graph::ServicePoints& services, const ZoneSpec& zones,
                                        double budget_s) {
  const auto& net = cn.base();
  const auto nodes = diffusion::record_nodes(net, records);
  const auto access = graph::building_access(cn, nodes, services.emergency_nodes(net),
                                             services.shelter_nodes(net), budget_s);
  const geo::LocalProjection proj(zones.origin);
  std::map<std::string, std::vector<graph::BuildingAccess>> grouped;
  for (std::size_t i = 0; i < records.size(); ++i) {
    grouped[zone_of(proj, records[i].position(), zones.zone_km)].push_back(access[i]);
  }
  std::vector<ZoneSummary> out;
  for (const auto& [id, items] : grouped) {
    const auto s = graph::summarize_access(items);
    out.push_back({id, s.buildings, s.reachability_rate, s.mean_travel_time_s, s.mean_redundancy});
  }
  return out;
}

}  // namespace

std::uint64_t RiskLayer::compute_checksum() const {
  std::string buf;
  buf.reserve(64 * weights.entries.size() + 64 * zones.size());
  put(buf, generated_at);
  put(buf, cadence_s);
  put(buf, weights.scenario_id);
  put(buf, weights.policy_id);
  put(buf, weights.generated_at);
  for (const auto& e : weights.entries) {
    put(buf, e.edge_id);
    put(buf, e.multiplier ? *e.multiplier : -1.0);
    put(buf, e.capacity_delta);
  }
  for (const auto& z : zones) {
    put(buf, z.zone_id);
    put(buf, static_cast<double>(z.buildings));
    put(buf, z.reachability_rate);
    put(buf, z.mean_travel_time_s ? *z.mean_travel_time_s : -1.0);
    put(buf, z.mean_redundancy);
  }
  return stable_hash(buf);
}

RiskLayer build_risk_layer(const graph::ConditionedNetwork& cn,
                           std::span<const data::BuildingRecord> records,
                           const graph::ServicePoints& services, const ZoneSpec& zones,
                           double budget_s, std::string generated_at, double cadence_s) {
  if (!(cadence_s > 0.0)) throw ArgumentError("cadence must be positive");
  if (!(zones.zone_km > 0.0)) throw ArgumentError("zone size must be positive");
  RiskLayer layer;
  layer.generated_at = generated_at;
  layer.cadence_s = cadence_s;
  layer.weights = graph::make_weight_layer(cn, std::move(generated_at));
  layer.zones = zone_summaries(cn, records, services, zones, budget_s);
  layer.seal();
  return layer;
}

std::vector<std::string> verify_zones(const RiskLayer& layer,
                                      std::shared_ptr<const graph::RoadNetwork> base,
                                      std::span<const data::BuildingRecord> records,
                                      const graph::ServicePoints& services, const ZoneSpec& zones,
                                      double budget_s) {
  const auto cn = graph::apply_weight_layer(std::move(base), layer.weights);
  const auto expect = zone_summaries(cn, records, services, zones, budget_s);
  std::map<std::string, const ZoneSummary*> have;
  for (const auto& z : layer.zones) have[z.zone_id] = &z;
  std::vector<std::string> bad;
  for (const auto& z : expect) {
    auto it = have.find(z.zone_id);
    if (it == have.end() || !(*it->second == z)) bad.push_back(z.zone_id);
    if (it != have.end()) have.erase(it);
  }
  for (const auto& [id, z] : have) bad.push_back(id);
  return bad;
}

json risk_layer_to_json(const RiskLayer& layer) {
  json zones = json::array();
  for (const auto& z : layer.zones) {
    zones.push_back({{"zone_id", z.zone_id},
                     {"buildings", z.buildings},
                     {"reachability_rate", z.reachability_rate},
                     {"mean_travel_time_s", z.mean_travel_time_s ? json(*z.mean_travel_time_s) : json(nullptr)},
                     {"mean_redundancy", z.mean_redundancy}});
  }
  return {{"schema_version", kRiskLayerSchemaVersion},
          {"version", layer.version},
          {"generated_at", layer.generated_at},
          {"cadence_s", layer.cadence_s},
          {"checksum", layer.checksum},
          {"weight_layer", graph::to_geojson(layer.weights)},
          {"zones", zones}};
}

RiskLayer risk_layer_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kRiskLayerSchemaVersion) {
      throw FormatError("unsupported risk layer schema_version");
    }
    RiskLayer layer;
    layer.version = j.at("version").get<std::uint64_t>();
    layer.generated_at = j.at("generated_at").get<std::string>();
    layer.cadence_s = j.at("cadence_s").get<double>();
    layer.checksum = j.at("checksum").get<std::uint64_t>();
    layer.weights = graph::weight_layer_from_geojson(j.at("weight_layer"));
    for (const auto& z : j.at("zones")) {
      ZoneSummary s;
      s.zone_id = z.at("zone_id").get<std::string>();
      s.buildings = z.at("buildings").get<std::size_t>();
      s.reachability_rate = z.at("reachability_rate").get<double>();
      if (!z.at("mean_travel_time_s").is_null()) s.mean_travel_time_s = z["mean_travel_time_s"].get<double>();
      s.mean_redundancy = z.at("mean_redundancy").get<double>();
      layer.zones.push_back(std::move(s));
    }
    return layer;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed risk layer: ") + e.what());
  }
}

}  // namespace urbanrisk::service
