#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "urbanrisk/data/synth.hpp"
#include "urbanrisk/diffusion/forecaster.hpp"
#include "urbanrisk/diffusion/trainer.hpp"
#include "urbanrisk/eval/splits.hpp"
#include "urbanrisk/graph/network.hpp"

namespace urbanrisk {

struct SplitConfig {
  eval::SplitRegime regime = eval::SplitRegime::kTemporal;
  eval::YearBounds bounds;
  double cell_km = 1.0;
  double test_frac = 0.2;
  std::string held_out_city;
};

struct EvalConfig {
  std::optional<double> q;  // recall@top-q percentage; required by evaluate
  // Flood-depth class edges in meters; the last class is the high-risk class.
  std::vector<double> flood_class_edges{0.05, 0.25};
  std::size_t max_pairs = 1000;
  int samples = 32;
};

struct ScenarioConfig {
  int horizon = 1;
  int samples = 100;
  bool sensitivity = true;
  int ensemble_members = 1;
  double ensemble_spread = 0.25;
  std::size_t max_risk_buildings = 128;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  double cadence_s = 900.0;
  double zone_km = 1.0;
};

/// Everything a pipeline run needs besides the seed.
struct PipelineConfig {
  std::vector<data::SynthConfig> cities{data::SynthConfig{}};
  graph::HazardPolicy policy;
  double time_budget_s = 900.0;
  SplitConfig split;
  diffusion::ForecasterConfig model;
  diffusion::TrainConfig train;
  EvalConfig eval;
  ScenarioConfig scenario;
  ServiceConfig service;

  void validate() const;  // throws ConfigError
};

/// Defaults sized for a desk run on the 1,000-building synthetic city.
PipelineConfig default_config();

// Throws ConfigError naming the offending key, including unknown keys.
PipelineConfig parse_config(std::string_view toml_text, std::string_view source = "<string>");
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace urbanrisk
