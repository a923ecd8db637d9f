#include "urbanrisk/graph/weight_layer.hpp"

#include "urbanrisk/errors.hpp"

namespace urbanrisk::graph {

using nlohmann::json;

WeightLayer make_weight_layer(const ConditionedNetwork& cn, std::string generated_at) {
  const auto& net = cn.base();
  WeightLayer layer;
  layer.scenario_id = cn.scenario_id();
  layer.policy_id = cn.policy_id();
  layer.generated_at = std::move(generated_at);
  layer.entries.reserve(net.num_edges());
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const auto& edge = net.edges()[e];
    const auto& st = cn.states()[e];
    WeightEntry entry;
    entry.edge_id = edge.id;
    entry.from = {net.node(edge.from).lat, net.node(edge.from).lon};
    entry.to = {net.node(edge.to).lat, net.node(edge.to).lon};
    if (!st.removed) entry.multiplier = st.multiplier;
    entry.capacity_delta = st.capacity_delta;
    layer.entries.push_back(std::move(entry));
  }
  return layer;
}

json to_geojson(const WeightLayer& layer) {
  json features = json::array();
  for (const auto& e : layer.entries) {
    json props = {{"edge_id", e.edge_id},
                  {"scenario_id", layer.scenario_id},
                  {"generated_at", layer.generated_at}};
    if (e.multiplier) {
      props["multiplier"] = *e.multiplier;
    } else {
      props["removed"] = true;
    }
    if (e.capacity_delta != 0.0) props["capacity_delta"] = e.capacity_delta;
    features.push_back({{"type", "Feature"},
                        {"geometry",
                         {{"type", "LineString"},
                          {"coordinates", {{e.from.lon, e.from.lat}, {e.to.lon, e.to.lat}}}}},
                        {"properties", std::move(props)}});
  }
  return {{"type", "FeatureCollection"},
          {"schema_version", kWeightLayerSchemaVersion},
          {"scenario_id", layer.scenario_id},
          {"policy_id", layer.policy_id},
          {"generated_at", layer.generated_at},
          {"features", std::move(features)}};
}

WeightLayer weight_layer_from_geojson(const json& doc) {
  try {
    if (doc.at("type") != "FeatureCollection") throw FormatError("weight layer is not a FeatureCollection");
    if (doc.value("schema_version", 0) != kWeightLayerSchemaVersion) {
      throw FormatError("unsupported weight layer schema_version");
    }
    WeightLayer layer;
    layer.scenario_id = doc.at("scenario_id").get<std::string>();
    layer.policy_id = doc.value("policy_id", std::string{});
    layer.generated_at = doc.at("generated_at").get<std::string>();
    for (const auto& f : doc.at("features")) {
      const auto& props = f.at("properties");
      const auto& coords = f.at("geometry").at("coordinates");
      WeightEntry e;
      e.edge_id = props.at("edge_id").get<std::string>();
      e.from = {coords.at(0).at(1).get<double>(), coords.at(0).at(0).get<double>()};
      e.to = {coords.at(1).at(1).get<double>(), coords.at(1).at(0).get<double>()};
      const bool removed = props.value("removed", false);
      if (removed == props.contains("multiplier")) {
        throw FormatError("edge " + e.edge_id + " must carry exactly one of multiplier/removed");
      }
      if (!removed) e.multiplier = props.at("multiplier").get<double>();
      e.capacity_delta = props.value("capacity_delta", 0.0);
      layer.entries.push_back(std::move(e));
    }
    return layer;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("malformed weight layer: ") + ex.what());
  }
}

std::string export_weight_layer(const ConditionedNetwork& cn, const std::string& generated_at) {
  return to_geojson(make_weight_layer(cn, generated_at)).dump();
}

ConditionedNetwork apply_weight_layer(std::shared_ptr<const RoadNetwork> base,
                                      const WeightLayer& layer) {
  if (!base) throw ArgumentError("apply_weight_layer requires a base network");
  std::vector<EdgeState> states(base->num_edges());
  std::vector<char> seen(base->num_edges(), 0);
  for (const auto& e : layer.entries) {
    const auto idx = static_cast<std::size_t>(base->edge_index(e.edge_id));
    seen[idx] = 1;
    states[idx].removed = e.removed();
    states[idx].multiplier = e.multiplier.value_or(1.0);
    states[idx].capacity_delta = e.capacity_delta;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ArgumentError("weight layer lacks edge " + base->edges()[i].id);
  }
  return ConditionedNetwork(std::move(base), std::move(states), layer.scenario_id, layer.policy_id);
}

}  // namespace urbanrisk::graph
