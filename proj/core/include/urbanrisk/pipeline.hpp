#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanrisk/config.hpp"
#include "urbanrisk/data/synth.hpp"
#include "urbanrisk/diffusion/forecaster.hpp"
#include "urbanrisk/eval/report.hpp"
#include "urbanrisk/eval/splits.hpp"
#include "urbanrisk/scenario/counterfactual.hpp"
#include "urbanrisk/service/risk_layer.hpp"

namespace urbanrisk::pipeline {

// One synthetic city per configured entry; city i uses derive_seed(seed, i).
std::vector<data::SyntheticCity> generate(const PipelineConfig& cfg, std::uint64_t seed);

eval::SplitManifest make_split(const PipelineConfig& cfg, std::span<const data::SyntheticCity> cities,
                               std::uint64_t seed);

struct TrainOutcome {
  diffusion::Forecaster forecaster;
  diffusion::TrainHistory history;
};

// Throws ArgumentError when the manifest does not cover every record.
TrainOutcome train(const PipelineConfig& cfg, std::span<const data::SyntheticCity> cities,
                   const eval::SplitManifest& manifest, std::uint64_t seed);

struct Evaluation {
  eval::MetricReport report;        // flood depth at the sampled test pairs
  eval::SubgroupReport by_income;   // income quintile strata
  double baseline_flood_mae = 0.0;  // predictor returning the train-mean flood depth
  std::size_t test_pairs = 0;       // before thinning to max_pairs
  std::size_t evaluated_pairs = 0;
};

/// Samples the forecaster on (record at t, record at t + h) pairs whose
/// target is in the test partition. Throws ConfigError when eval.q is unset
/// and ArgumentError when the manifest has no test records.
Evaluation evaluate(const PipelineConfig& cfg, std::span<const data::SyntheticCity> cities,
                    const eval::SplitManifest& manifest, const diffusion::Forecaster& forecaster,
                    std::uint64_t seed);

nlohmann::json evaluation_to_json(const Evaluation& e);

// Latest year on record in the city.
int latest_year(const data::SyntheticCity& city);

scenario::ScenarioResult run_scenario(const PipelineConfig& cfg, const data::SyntheticCity& city,
                                      const diffusion::Forecaster& forecaster,
                                      std::span<const scenario::InterventionPrompt> prompts,
                                      std::uint64_t seed, std::optional<int> year = std::nullopt);

// Risk layer of the city's network conditioned on one year's hazard scenario.
service::RiskLayer build_layer(const PipelineConfig& cfg, const data::SyntheticCity& city, int year,
                               const std::string& generated_at);

// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace urbanrisk::pipeline
