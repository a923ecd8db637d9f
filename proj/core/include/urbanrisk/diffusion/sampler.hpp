#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "urbanrisk/diffusion/denoiser.hpp"
#include "urbanrisk/diffusion/schedule.hpp"

namespace urbanrisk::diffusion {

inline constexpr int kDefaultSamplerSteps = 50;
inline constexpr int kDefaultEnsembleSize = 100;

struct SamplerOptions {
  int steps = kDefaultSamplerSteps;
  // Clamp each x0 estimate to [-clip, clip]; useful for learned models whose
  // eps error is amplified at large t.
  std::optional<double> clip_x0;
  // Columns per denoiser call when sampling large batches.
  int chunk = 4096;
};

/// Deterministic (eta = 0) DDIM from the given x_T columns down to x_0 over
/// sampling_steps(T, steps). Throws StateError for an untrained denoiser.
Eigen::MatrixXd ddim_sample_batch(const NoisePredictor& denoiser, const NoiseSchedule& schedule,
                                  const Eigen::MatrixXd& cond, const Eigen::MatrixXd& x_T,
                                  const SamplerOptions& options = {});

// Single trajectory with x_T ~ N(0, I) drawn from seed.
Eigen::VectorXd ddim_sample(const NoisePredictor& denoiser, const NoiseSchedule& schedule,
                            const Eigen::VectorXd& cond, std::uint64_t seed,
                            const SamplerOptions& options = {});

// Starting noise for member i of an ensemble seeded with seed.
Eigen::VectorXd member_noise(std::uint64_t seed, int member, int dim);

struct SampleSet {
  Eigen::MatrixXd samples;  // n x target_dim
  Eigen::VectorXd mean;
  Eigen::VectorXd ci_low;   // 5th percentile, lowered to the mean if needed
  Eigen::VectorXd ci_high;  // 95th percentile, raised to the mean if needed
  int size() const { return static_cast<int>(samples.rows()); }
};

// Percentile with linear interpolation between order statistics, q in [0, 1].
double percentile(std::vector<double> values, double q);

/// Mean and central credible interval per column. Throws ArgumentError for
/// fewer than 2 samples or level outside (0, 1).
SampleSet summarize_samples(Eigen::MatrixXd samples, double level = 0.9);

nlohmann::json sample_summary_json(const SampleSet& s, bool include_samples = false);

/// n DDIM samples for one conditioning vector; member i starts from
/// member_noise(seed, i). Throws ArgumentError when n < 2.
SampleSet ensemble_sample(const NoisePredictor& denoiser, const NoiseSchedule& schedule,
                          const Eigen::VectorXd& cond, int n, std::uint64_t seed,
                          const SamplerOptions& options = {});

// One SampleSet per conditioning column, each with its own seed.
std::vector<SampleSet> ensemble_sample_many(const NoisePredictor& denoiser,
                                            const NoiseSchedule& schedule,
                                            const Eigen::MatrixXd& cond,
                                            std::span<const std::uint64_t> seeds, int n,
                                            const SamplerOptions& options = {});

}  // namespace urbanrisk::diffusion
