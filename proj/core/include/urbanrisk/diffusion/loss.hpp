#pragma once

#include <cstdint>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "urbanrisk/diffusion/denoiser.hpp"
#include "urbanrisk/diffusion/schedule.hpp"

namespace urbanrisk::diffusion {

struct LossWeights {
  double diff = 1.0;
  double flood = 0.5;
  double heat = 0.5;
  double structure = 0.3;
  double transport = 0.2;
  void validate() const;  // throws ArgumentError on negative weights
  bool operator==(const LossWeights&) const = default;
};

nlohmann::json weights_to_json(const LossWeights& w);
LossWeights weights_from_json(const nlohmann::json& j);

struct LossComponents {
  double diff = 0.0;
  double flood = 0.0;
  double heat = 0.0;
  double structure = 0.0;
  double transport = 0.0;
};

// Weighted sum. Throws ArgumentError for negative or non-finite components.
double combined_loss(const LossComponents& c, const LossWeights& w = {});

/// Mean over the batch of ||eps - eps_theta(x_t, t, c)||^2 with t drawn
/// uniformly from [1, T] and eps ~ N(0, I), both from the seed. x0 and cond
/// are column batches. Throws ArgumentError for an empty batch.
double diffusion_loss(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& cond,
                      const NoisePredictor& denoiser, const NoiseSchedule& schedule,
                      std::uint64_t seed);

/// Noised batch shared by the loss and the trainer.
struct NoisedBatch {
  std::vector<int> steps;
  Eigen::MatrixXd eps;
  Eigen::MatrixXd x_t;
};
NoisedBatch draw_noised_batch(const Eigen::MatrixXd& x0, const NoiseSchedule& schedule,
                              std::uint64_t seed);

/// Loss components for the hybrid denoiser: L_diff from the eps head and
/// per-task MSE of the x0 head against the clean (normalized) targets, in
/// target order flood, heat, structure, transport.
LossComponents hybrid_loss(const ResidualDenoiser::Output& out, const NoisedBatch& batch,
                           const Eigen::MatrixXd& x0);

}  // namespace urbanrisk::diffusion
