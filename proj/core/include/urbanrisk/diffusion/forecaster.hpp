#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "urbanrisk/data/partition.hpp"
#include "urbanrisk/data/records.hpp"
#include "urbanrisk/data/synth.hpp"
#include "urbanrisk/diffusion/denoiser.hpp"
#include "urbanrisk/diffusion/sampler.hpp"
#include "urbanrisk/diffusion/schedule.hpp"
#include "urbanrisk/diffusion/trainer.hpp"
#include "urbanrisk/graph/accessibility.hpp"
#include "urbanrisk/repr/clustering.hpp"
#include "urbanrisk/repr/fusion.hpp"
#include "urbanrisk/repr/prompt_encoder.hpp"

namespace urbanrisk::diffusion {

inline constexpr int kCheckpointSchemaVersion = 1;
// degree, T, R, K and three city-wide T quantiles.
inline constexpr int kGraphSummaryDim = 7;

struct ForecasterConfig {
  repr::ModalityDims dims = repr::ModalityDims::desk();
  int token_dim = 16;
  int clusters = 8;
  int prompt_dim = 12;
  int time_dim = 16;
  int hidden = 64;
  int blocks = 3;
  int schedule_steps = 1000;
  double beta_min = 1e-4;
  double beta_max = 2e-2;
  int sampler_steps = kDefaultSamplerSteps;
  std::optional<double> clip_x0 = 6.0;
  double modality_dropout = 0.1;
  double time_budget_s = 900.0;

  int cond_dim() const {
    return dims.fused() + token_dim + static_cast<int>(data::TargetVector::kSize) +
           kGraphSummaryDim + prompt_dim;
  }
  void validate() const;  // throws ConfigError
};

nlohmann::json forecaster_config_to_json(const ForecasterConfig& c);
ForecasterConfig forecaster_config_from_json(const nlohmann::json& j);

/// One city at one year: the records of that year plus the conditioned
/// network they see. Records are in raw (unnormalized) units.
struct Snapshot {
  const data::SyntheticCity* city = nullptr;
  int year = 0;
  std::vector<data::BuildingRecord> records;
  std::shared_ptr<const graph::ConditionedNetwork> network;
};

// Records of the given year with the network conditioned on that year's
// scenario (free flow when the city has none for the year).
Snapshot make_snapshot(const data::SyntheticCity& city, int year, const graph::HazardPolicy& policy);
// Same records, different network.
Snapshot with_network(const Snapshot& s, graph::ConditionedNetwork network);

// (record at t, horizon, record at t + horizon) of one building.
struct ForecastPair {
  std::size_t source = 0;  // index into city.dataset.records
  std::size_t target = 0;
  int horizon = 0;
};
std::vector<ForecastPair> forecast_pairs(const data::CityDataset& dataset);

std::uint64_t building_seed(std::uint64_t seed, const std::string& building_id);

// Network node of each record: its node_attachment when known, else the nearest node.
std::vector<graph::NodeIndex> record_nodes(const graph::RoadNetwork& net,
                                           std::span<const data::BuildingRecord> records);

/// Conditional diffusion forecaster of the four-component target vector at
/// t + horizon. Conditioning per building concatenates the fused modality
/// representation, its spatial cluster token, the normalized current targets,
/// a graph summary of the conditioned network and the prompt embedding.
class Forecaster {
 public:
  Forecaster(const ForecasterConfig& config, std::uint64_t seed);

  const ForecasterConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  bool trained() const { return denoiser_.trained(); }
  const NoiseSchedule& schedule() const { return schedule_; }
  const ResidualDenoiser& denoiser() const { return denoiser_; }
  const data::NormalizationStats& normalization() const;  // throws StateError before fit

  /// Fits train-only normalization, builds forecast pairs whose target record
  /// is in train, and trains the denoiser.
  TrainHistory fit(std::span<const data::SyntheticCity> cities, const data::PartitionMap& partitions,
                   const TrainConfig& train, const graph::HazardPolicy& policy);

  // cond_dim x records.size() conditioning for a horizon in [1, 10].
  Eigen::MatrixXd conditioning(const Snapshot& s, int horizon) const;
  // One matrix per horizon; the snapshot-dependent part is computed once.
  std::vector<Eigen::MatrixXd> conditioning(const Snapshot& s, std::span<const int> horizons) const;

  repr::PromptFields prompt_fields(const data::CityProfile& profile,
                                   const graph::AccessibilitySummary& access, int horizon) const;

  /// n samples per selected record in raw target units (clamped to the
  /// target domains). Member noise is seeded per building id, so two
  /// snapshots of the same buildings share starting noise.
  std::vector<SampleSet> sample(const Snapshot& s, int horizon, std::span<const std::size_t> which,
                                int n, std::uint64_t seed) const;
  std::vector<SampleSet> sample_conditioned(const Eigen::MatrixXd& cond,
                                            std::span<const std::uint64_t> seeds, int n) const;

  nlohmann::json to_json() const;
  static Forecaster from_json(const nlohmann::json& j);  // throws FormatError
  void save(const std::filesystem::path& path) const;
  static Forecaster load(const std::filesystem::path& path);

 private:
  struct SnapshotParts {
    Eigen::MatrixXd base;  // everything but the prompt block
    std::vector<repr::ModalityEmbedding> modalities;
    graph::AccessibilitySummary access;
  };
  SnapshotParts snapshot_parts(const Snapshot& s) const;
  data::BuildingRecord normalized(const data::BuildingRecord& r) const;
  void ensure_normalized() const;

  ForecasterConfig config_;
  std::uint64_t seed_;
  NoiseSchedule schedule_;
  repr::ModalityEncoders encoders_;
  repr::FusionModule fusion_;
  repr::TokenMlp token_mlp_;
  repr::PromptEncoder prompt_encoder_;
  ResidualDenoiser denoiser_;
  std::optional<data::NormalizationStats> normalization_;
};

}  // namespace urbanrisk::diffusion
