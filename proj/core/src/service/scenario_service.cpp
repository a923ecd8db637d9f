#include "urbanrisk/service/scenario_service.hpp"

#include <algorithm>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/graph/weight_layer.hpp"

namespace urbanrisk::service {

using nlohmann::json;

namespace {

template <typename T>
void read_field(const json& obj, const char* key, const std::string& path, T& out,
                std::vector<FieldError>& errors) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    errors.push_back({path + key, "has the wrong type"});
  }
}

}  // namespace

ScenarioRequest scenario_request_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError(std::vector<FieldError>{{"request", "must be a JSON object"}});
  ScenarioRequest r;
  std::vector<FieldError> errors;
  read_field(j, "request_id", "", r.request_id, errors);
  if (r.request_id.empty()) errors.push_back({"request_id", "is required"});

  std::vector<json> prompts;
  if (j.contains("prompts")) {
    if (!j["prompts"].is_array()) {
      errors.push_back({"prompts", "must be an array"});
    } else {
      prompts.assign(j["prompts"].begin(), j["prompts"].end());
    }
  }
  if (j.contains("prompt")) prompts.push_back(j["prompt"]);
  if (prompts.empty()) errors.push_back({"prompts", "at least one prompt is required"});
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    try {
      r.prompts.push_back(scenario::prompt_from_json(prompts[i]));
    } catch (const ValidationError& e) {
      for (const auto& f : e.fields()) errors.push_back({"prompts[" + std::to_string(i) + "]." + f.field, f.message});
    }
  }

  std::string hazard;
  read_field(j, "hazard_id", "", hazard, errors);
  if (!hazard.empty()) r.hazard_id = hazard;
  if (j.contains("year")) {
    int year = 0;
    read_field(j, "year", "", year, errors);
    r.year = year;
  }
  if (j.contains("options")) {
    const auto& o = j["options"];
    if (!o.is_object()) {
      errors.push_back({"options", "must be an object"});
    } else {
      read_field(o, "horizon", "options.", r.horizon, errors);
      read_field(o, "samples", "options.", r.samples, errors);
      read_field(o, "seed", "options.", r.seed, errors);
      read_field(o, "sensitivity", "options.", r.sensitivity, errors);
      read_field(o, "ensemble_members", "options.", r.ensemble_members, errors);
    }
  }
  if (r.horizon < 1 || r.horizon > 10) errors.push_back({"options.horizon", "must be within [1, 10]"});
  if (r.samples < 2) errors.push_back({"options.samples", "must be >= 2"});
  if (r.ensemble_members < 1) errors.push_back({"options.ensemble_members", "must be >= 1"});
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return r;
}

json scenario_request_to_json(const ScenarioRequest& r) {
  json prompts = json::array();
  for (const auto& p : r.prompts) prompts.push_back(scenario::prompt_to_json(p));
  json j = {{"request_id", r.request_id},
            {"prompts", prompts},
            {"options",
             {{"horizon", r.horizon},
              {"samples", r.samples},
              {"seed", r.seed},
              {"sensitivity", r.sensitivity},
              {"ensemble_members", r.ensemble_members}}}};
  if (r.hazard_id) j["hazard_id"] = *r.hazard_id;
  if (r.year) j["year"] = *r.year;
  return j;
}

ScenarioService::ScenarioService(std::shared_ptr<const data::SyntheticCity> city,
                                 std::shared_ptr<const diffusion::Forecaster> forecaster,
                                 const LayerStore* store, ScenarioServiceConfig config)
    : city_(std::move(city)), forecaster_(std::move(forecaster)), store_(store), config_(std::move(config)) {
  if (!city_) throw ArgumentError("scenario service needs a city");
  config_.policy.validate();
}

json ScenarioService::handle(const json& request) const { return run(scenario_request_from_json(request)); }

json ScenarioService::run(const ScenarioRequest& req) const {
  if (!forecaster_ || !forecaster_->trained()) throw StateError("no trained forecaster is loaded");
  if (req.samples > config_.max_samples) {
    throw ValidationError(std::vector<FieldError>{
        {"options.samples", "must be <= " + std::to_string(config_.max_samples)}});
  }
  const auto& records = city_->dataset.records;
  int year = 0;
  if (req.year) {
    year = *req.year;
  } else {
    for (const auto& r : records) year = std::max(year, r.year);
  }
  const auto hazard_id = req.hazard_id.value_or(data::scenario_id_for_year(city_->dataset.city_id, year));
  auto it = std::find_if(city_->scenarios.begin(), city_->scenarios.end(),
                         [&](const graph::HazardScenario& h) { return h.id == hazard_id; });
  if (it == city_->scenarios.end()) {
    throw ValidationError(std::vector<FieldError>{{"hazard_id", "unknown hazard scenario " + hazard_id}});
  }

  auto snapshot = diffusion::make_snapshot(*city_, year, config_.policy);
  snapshot.network = std::make_shared<const graph::ConditionedNetwork>(
      graph::condition_network(city_->network, *it, config_.policy));

  scenario::HazardEnsemble ensemble;
  if (req.ensemble_members > 1) {
    for (const auto& member : data::scenario_ensemble(*it, req.ensemble_members, req.seed, config_.ensemble_spread)) {
      ensemble.members.push_back(graph::condition_network(city_->network, member, config_.policy));
    }
  }

  scenario::CounterfactualOptions opts;
  opts.horizon = req.horizon;
  opts.samples = req.samples;
  opts.seed = req.seed;
  opts.sensitivity = req.sensitivity;
  opts.time_budget_s = config_.time_budget_s;
  opts.max_risk_buildings = config_.max_risk_buildings;
  const auto result = scenario::run_counterfactual(req.prompts, snapshot, ensemble, *forecaster_, opts);

  const auto published = store_ ? store_->try_current() : nullptr;
  const std::string generated_at = published ? published->layer.generated_at : std::string{};
  const auto& edited = *result.primary().network;
  json deltas = json::array();
  for (std::size_t e = 0; e < edited.states().size(); ++e) {
    const auto& before = snapshot.network->states()[e];
    const auto& after = edited.states()[e];
    if (before.multiplier == after.multiplier && before.removed == after.removed &&
        before.capacity_delta == after.capacity_delta) {
      continue;
    }
    auto mult = [](const graph::EdgeState& s) { return s.removed ? json(nullptr) : json(s.multiplier); };
    deltas.push_back({{"edge_id", edited.base().edges()[e].id},
                      {"multiplier_before", mult(before)},
                      {"multiplier_after", mult(after)},
                      {"capacity_delta", after.capacity_delta - before.capacity_delta}});
  }
  return {{"schema_version", kScenarioResponseSchemaVersion},
          {"request_id", req.request_id},
          {"hazard_id", hazard_id},
          {"layer_version", published ? json(published->layer.version) : json(nullptr)},
          {"result", scenario::scenario_result_to_json(result)},
          {"layer_deltas", deltas},
          {"edited_layer", graph::to_geojson(graph::make_weight_layer(edited, generated_at))}};
}

}  // namespace urbanrisk::service
