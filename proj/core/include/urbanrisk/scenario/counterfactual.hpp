#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanrisk/diffusion/forecaster.hpp"
#include "urbanrisk/graph/accessibility.hpp"
#include "urbanrisk/scenario/edits.hpp"
#include "urbanrisk/scenario/prompt.hpp"

namespace urbanrisk::scenario {

inline constexpr int kScenarioResultSchemaVersion = 1;

struct CounterfactualOptions {
  int horizon = 1;
  int samples = 100;
  std::uint64_t seed = 0;
  bool sensitivity = true;  // adds the 0.5 and 1.5 delta variants
  double time_budget_s = 900.0;
  double drainage_calibration = 1.0;
  // Cap on buildings that get risk samples; 0 means no cap. Larger selections
  // are thinned by an even stride over record ids.
  std::size_t max_risk_buildings = 0;
};

struct AccessibilityDelta {
  graph::AccessibilitySummary baseline;
  graph::AccessibilitySummary edited;
  double reachability_rate = 0.0;
  std::optional<double> mean_travel_time_s;  // nullopt when either side has no finite T
  double mean_redundancy = 0.0;
};

struct BuildingRisk {
  std::string record_id;
  std::string building_id;
  diffusion::SampleSet baseline;
  diffusion::SampleSet edited;
  diffusion::SampleSet delta;  // paired differences edited - baseline
};

struct ScenarioVariant {
  double factor = 1.0;
  std::vector<InterventionPrompt> prompts;  // as applied (scaled)
  std::vector<EditReport> reports;
  std::vector<BuildingRisk> buildings;
  AccessibilityDelta access;
  // Edited counterpart of the snapshot network, for layer export.
  std::shared_ptr<const graph::ConditionedNetwork> network;
};

struct ScenarioResult {
  std::string city_id;
  int year = 0;
  int horizon = 1;
  int samples = 0;
  std::uint64_t seed = 0;
  std::size_t risk_buildings_selected = 0;  // before the cap
  std::vector<ScenarioVariant> variants;     // factor 1 first

  const ScenarioVariant& primary() const { return variants.front(); }
};

/// Hazard-ensemble members for accessibility; empty means the snapshot
/// network alone. Weights default to uniform.
struct HazardEnsemble {
  std::vector<graph::ConditionedNetwork> members;
  std::vector<double> weights;
};

/// Applies the prompts to the snapshot's records and network, samples
/// baseline and edited risk with shared per-building noise and recomputes
/// accessibility on every edited ensemble member. Throws StateError for an
/// untrained forecaster, ValidationError for invalid prompts and
/// ArgumentError when a prompt names edges the network lacks.
ScenarioResult run_counterfactual(std::span<const InterventionPrompt> prompts,
                                  const diffusion::Snapshot& snapshot, const HazardEnsemble& ensemble,
                                  const diffusion::Forecaster& forecaster,
                                  const CounterfactualOptions& options = {});

// Accessibility only: no forecaster involved.
AccessibilityDelta accessibility_delta(std::span<const InterventionPrompt> prompts,
                                       const diffusion::Snapshot& snapshot,
                                       const HazardEnsemble& ensemble, double time_budget_s);

nlohmann::json scenario_result_to_json(const ScenarioResult& r);

}  // namespace urbanrisk::scenario
