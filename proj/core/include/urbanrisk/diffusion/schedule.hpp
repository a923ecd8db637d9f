#pragma once

#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace urbanrisk::diffusion {

/// Linear variance schedule with 1-based step access: beta(1) = beta_min and
/// beta(T) = beta_max.
class NoiseSchedule {
 public:
  int steps() const { return static_cast<int>(beta_.size()); }
  double beta_min() const { return beta_.front(); }
  double beta_max() const { return beta_.back(); }
  double beta(int t) const { return beta_[index(t)]; }
  double alpha(int t) const { return 1.0 - beta_[index(t)]; }
  // Running product; alpha_bar(0) = 1 by convention.
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bar_[index(t)]; }
  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

  friend NoiseSchedule build_schedule(int steps, double beta_min, double beta_max);

 private:
  std::size_t index(int t) const;
  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

// Throws ArgumentError unless steps >= 2 and 0 < beta_min < beta_max < 1.
NoiseSchedule build_schedule(int steps = 1000, double beta_min = 1e-4, double beta_max = 2e-2);

nlohmann::json schedule_to_json(const NoiseSchedule& s);
NoiseSchedule schedule_from_json(const nlohmann::json& j);

/// x_t = sqrt(alpha_bar_t) x_0 + sqrt(1 - alpha_bar_t) eps. Throws
/// ArgumentError when t is outside [1, T] or the shapes differ.
Eigen::VectorXd forward_noise(const Eigen::VectorXd& x0, int t, const NoiseSchedule& schedule,
                              const Eigen::VectorXd& eps);

/// Evenly spaced descending step subset that always contains T and 1 (just
/// {T} when count = 1). Throws ArgumentError unless 1 <= count <= T.
std::vector<int> sampling_steps(int total_steps, int count);

}  // namespace urbanrisk::diffusion
