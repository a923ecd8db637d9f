#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanrisk/data/synth.hpp"
#include "urbanrisk/diffusion/forecaster.hpp"
#include "urbanrisk/scenario/counterfactual.hpp"
#include "urbanrisk/scenario/prompt.hpp"
#include "urbanrisk/service/layer_store.hpp"

namespace urbanrisk::service {

inline constexpr int kScenarioResponseSchemaVersion = 1;

struct ScenarioRequest {
  std::string request_id;
  std::vector<scenario::InterventionPrompt> prompts;
  std::optional<std::string> hazard_id;  // defaults to the snapshot year's scenario
  std::optional<int> year;               // defaults to the latest year on record
  int horizon = 1;
  int samples = 100;
  std::uint64_t seed = 0;
  bool sensitivity = true;
  int ensemble_members = 1;
};

/// Accepts {"request_id", "prompts": [...] or "prompt": {...}, "hazard_id",
/// "year", "options": {"horizon", "samples", "seed", "sensitivity",
/// "ensemble_members"}}. Throws ValidationError with field-level messages.
ScenarioRequest scenario_request_from_json(const nlohmann::json& j);
nlohmann::json scenario_request_to_json(const ScenarioRequest& r);

struct ScenarioServiceConfig {
  graph::HazardPolicy policy;
  double time_budget_s = 900.0;
  std::size_t max_risk_buildings = 0;
  double ensemble_spread = 0.25;
  int max_samples = 1000;
};

/// Runs counterfactual requests against one city. Safe to call concurrently:
/// every request builds its own snapshot from immutable inputs.
class ScenarioService {
 public:
  ScenarioService(std::shared_ptr<const data::SyntheticCity> city,
                  std::shared_ptr<const diffusion::Forecaster> forecaster, const LayerStore* store,
                  ScenarioServiceConfig config = {});

  // Throws ValidationError, StateError (no trained forecaster) or ArgumentError.
  nlohmann::json handle(const nlohmann::json& request) const;
  nlohmann::json run(const ScenarioRequest& request) const;

  const data::SyntheticCity& city() const { return *city_; }

 private:
  std::shared_ptr<const data::SyntheticCity> city_;
  std::shared_ptr<const diffusion::Forecaster> forecaster_;
  const LayerStore* store_;
  ScenarioServiceConfig config_;
};

}  // namespace urbanrisk::service
