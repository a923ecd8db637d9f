#include "urbanrisk/diffusion/loss.hpp"

#include <cmath>
#include <random>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/random.hpp"

namespace urbanrisk::diffusion {

void LossWeights::validate() const {
  for (double w : {diff, flood, heat, structure, transport}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("loss weights must be finite and >= 0");
  }
}

nlohmann::json weights_to_json(const LossWeights& w) {
  return {{"diff", w.diff},
          {"flood", w.flood},
          {"heat", w.heat},
          {"structure", w.structure},
          {"transport", w.transport}};
}

LossWeights weights_from_json(const nlohmann::json& j) {
  LossWeights w;
  w.diff = j.value("diff", w.diff);
  w.flood = j.value("flood", w.flood);
  w.heat = j.value("heat", w.heat);
  w.structure = j.value("structure", w.structure);
  w.transport = j.value("transport", w.transport);
  w.validate();
  return w;
}

double combined_loss(const LossComponents& c, const LossWeights& w) {
  w.validate();
  for (double v : {c.diff, c.flood, c.heat, c.structure, c.transport}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ArgumentError("loss components must be finite and >= 0");
    }
  }
  return w.diff * c.diff + w.flood * c.flood + w.heat * c.heat + w.structure * c.structure +
         w.transport * c.transport;
}

NoisedBatch draw_noised_batch(const Eigen::MatrixXd& x0, const NoiseSchedule& schedule,
                              std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(1, schedule.steps());
  std::normal_distribution<double> n01(0.0, 1.0);
  NoisedBatch b;
  b.steps.resize(static_cast<std::size_t>(x0.cols()));
  b.eps.resize(x0.rows(), x0.cols());
  b.x_t.resize(x0.rows(), x0.cols());
  for (Eigen::Index j = 0; j < x0.cols(); ++j) {
    const int t = pick(rng);
    b.steps[static_cast<std::size_t>(j)] = t;
    for (Eigen::Index i = 0; i < x0.rows(); ++i) b.eps(i, j) = n01(rng);
    const double ab = schedule.alpha_bar(t);
    b.x_t.col(j) = std::sqrt(ab) * x0.col(j) + std::sqrt(1.0 - ab) * b.eps.col(j);
  }
  return b;
}

double diffusion_loss(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& cond,
                      const NoisePredictor& denoiser, const NoiseSchedule& schedule,
                      std::uint64_t seed) {
  if (x0.cols() == 0) throw ArgumentError("diffusion loss needs a non-empty batch");
  if (x0.rows() != denoiser.target_dim()) {
    throw ArgumentError("target dim does not match the denoiser");
  }
  const auto b = draw_noised_batch(x0, schedule, seed);
  const Eigen::MatrixXd pred = denoiser.predict_eps(b.x_t, b.steps, cond);
  return (b.eps - pred).colwise().squaredNorm().mean();
}

LossComponents hybrid_loss(const ResidualDenoiser::Output& out, const NoisedBatch& batch,
                           const Eigen::MatrixXd& x0) {
  LossComponents c;
  c.diff = (batch.eps - out.eps).colwise().squaredNorm().mean();
  const Eigen::VectorXd task = (out.x0 - x0).array().square().rowwise().mean();
  double* slots[] = {&c.flood, &c.heat, &c.structure, &c.transport};
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(4, task.size()); ++i) *slots[i] = task(i);
  return c;
}

}  // namespace urbanrisk::diffusion
