#include "urbanrisk/diffusion/schedule.hpp"

#include <cmath>
#include <string>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::diffusion {

std::size_t NoiseSchedule::index(int t) const {
  if (t < 1 || t > steps()) {
    throw ArgumentError("diffusion step " + std::to_string(t) + " outside [1, " +
                        std::to_string(steps()) + "]");
  }
  return static_cast<std::size_t>(t - 1);
}

NoiseSchedule build_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 2) throw ArgumentError("schedule needs at least 2 steps");
  if (!(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0)) {
    throw ArgumentError("schedule bounds must satisfy 0 < beta_min < beta_max < 1");
  }
  NoiseSchedule s;
  s.beta_.resize(static_cast<std::size_t>(steps));
  s.alpha_bar_.resize(static_cast<std::size_t>(steps));
  double prod = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double b = beta_min + (beta_max - beta_min) * i / static_cast<double>(steps - 1);
    s.beta_[static_cast<std::size_t>(i)] = b;
    prod *= 1.0 - b;
    s.alpha_bar_[static_cast<std::size_t>(i)] = prod;
  }
  return s;
}

nlohmann::json schedule_to_json(const NoiseSchedule& s) {
  return {{"steps", s.steps()}, {"beta_min", s.beta_min()}, {"beta_max", s.beta_max()}};
}

NoiseSchedule schedule_from_json(const nlohmann::json& j) {
  return build_schedule(j.at("steps").get<int>(), j.at("beta_min").get<double>(),
                        j.at("beta_max").get<double>());
}

Eigen::VectorXd forward_noise(const Eigen::VectorXd& x0, int t, const NoiseSchedule& schedule,
                              const Eigen::VectorXd& eps) {
  if (x0.size() != eps.size()) throw ArgumentError("x0 and noise must have the same dimension");
  if (!x0.allFinite()) throw ArgumentError("x0 must be finite");
  const double ab = schedule.alpha_bar(t == 0 ? -1 : t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

std::vector<int> sampling_steps(int total_steps, int count) {
  if (count < 1 || count > total_steps) {
    throw ArgumentError("sampler step count " + std::to_string(count) + " outside [1, " +
                        std::to_string(total_steps) + "]");
  }
  if (count == 1) return {total_steps};
  std::vector<int> out(static_cast<std::size_t>(count));
  const double spacing = (total_steps - 1) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] =
        static_cast<int>(std::lround(1.0 + spacing * (count - 1 - i)));
  }
  return out;
}

}  // namespace urbanrisk::diffusion
