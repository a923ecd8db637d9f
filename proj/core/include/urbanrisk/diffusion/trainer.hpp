#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "urbanrisk/diffusion/denoiser.hpp"
#include "urbanrisk/diffusion/loss.hpp"
#include "urbanrisk/diffusion/schedule.hpp"

namespace urbanrisk::diffusion {

struct TrainingSet {
  Eigen::MatrixXd x0;    // normalized targets, target_dim x N
  Eigen::MatrixXd cond;  // cond_dim x N
  std::size_t size() const { return static_cast<std::size_t>(x0.cols()); }
};

struct StageConfig {
  int stage = 1;
  int epochs = 10;
  double learning_rate = 2e-4;
  // Leading parameter groups held fixed; -1 freezes the first half.
  int freeze_groups = 0;
};

struct TrainConfig {
  std::vector<StageConfig> stages{StageConfig{}};
  int batch_size = 128;
  double weight_decay = 1e-2;
  double grad_clip = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  LossWeights weights;
  int probe_size = 512;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  int stage = 1;
  LossComponents components;  // batch averages over the epoch
  double combined = 0.0;
  double probe = 0.0;         // combined loss on the fixed probe batch after the epoch
};

struct TrainHistory {
  double initial_probe = 0.0;
  std::vector<EpochRecord> epochs;
  std::string to_csv() const;
};

// Called at the start of each epoch with a copy of the clean conditioning;
// may modify it (e.g. modality dropout).
using ConditioningHook = std::function<void(int epoch, Eigen::MatrixXd& cond)>;

/// AdamW with per-stage cosine decay and global-norm gradient clipping.
/// Throws ArgumentError for a freeze count above the group count and
/// TrainingDiverged when a batch loss becomes non-finite. Marks the denoiser
/// trained on success.
TrainHistory train_denoiser(ResidualDenoiser& denoiser, const NoiseSchedule& schedule,
                            const TrainingSet& data, const TrainConfig& config,
                            const ConditioningHook& augment = {});

// Combined loss of the denoiser on a fixed noised batch.
LossComponents evaluate_components(const ResidualDenoiser& denoiser, const NoisedBatch& batch,
                                   const Eigen::MatrixXd& x0, const Eigen::MatrixXd& cond);

}  // namespace urbanrisk::diffusion
