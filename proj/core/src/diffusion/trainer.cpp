#include "urbanrisk/diffusion/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/random.hpp"

namespace urbanrisk::diffusion {

using Eigen::Index;
using Eigen::MatrixXd;

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,stage,L_diff,L_flood,L_heat,L_struct,L_transport,combined,probe\n";
  for (const auto& e : epochs) {
    const auto& c = e.components;
    out << e.epoch << ',' << e.stage << ',' << c.diff << ',' << c.flood << ',' << c.heat << ','
        << c.structure << ',' << c.transport << ',' << e.combined << ',' << e.probe << '\n';
  }
  return out.str();
}

LossComponents evaluate_components(const ResidualDenoiser& denoiser, const NoisedBatch& batch,
                                   const MatrixXd& x0, const MatrixXd& cond) {
  return hybrid_loss(denoiser.forward(batch.x_t, batch.steps, cond), batch, x0);
}

namespace {

struct BatchGradient {
  LossComponents components;
  Eigen::VectorXd grad;
};

BatchGradient batch_gradient(const ResidualDenoiser& net, const NoisedBatch& b, const MatrixXd& x0,
                             const MatrixXd& cond, const LossWeights& w) {
  const auto out = net.forward(b.x_t, b.steps, cond);
  const double n = static_cast<double>(x0.cols());
  const MatrixXd d_eps = (2.0 * w.diff / n) * (out.eps - b.eps);
  MatrixXd d_x0 = (2.0 / n) * (out.x0 - x0);
  const double task_w[] = {w.flood, w.heat, w.structure, w.transport};
  for (Index i = 0; i < d_x0.rows(); ++i) d_x0.row(i) *= i < 4 ? task_w[i] : 0.0;
  return {hybrid_loss(out, b, x0), net.backward(b.x_t, b.steps, cond, d_eps, d_x0)};
}

MatrixXd gather(const MatrixXd& m, const std::vector<Index>& cols) {
  MatrixXd out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
  return out;
}

std::string describe(const LossComponents& c) {
  std::ostringstream s;
  s << "L_diff=" << c.diff << " L_flood=" << c.flood << " L_heat=" << c.heat
    << " L_struct=" << c.structure << " L_transport=" << c.transport;
  return s.str();
}

}  // namespace

TrainHistory train_denoiser(ResidualDenoiser& net, const NoiseSchedule& schedule,
                            const TrainingSet& data, const TrainConfig& config,
                            const ConditioningHook& augment) {
  config.weights.validate();
  const Index n = data.x0.cols();
  if (n == 0) throw ArgumentError("training set is empty");
  if (data.x0.rows() != net.target_dim() || data.cond.rows() != net.cond_dim() ||
      data.cond.cols() != n) {
    throw ArgumentError("training set shape does not match the denoiser");
  }
  if (config.batch_size < 1) throw ArgumentError("batch size must be >= 1");
  if (config.stages.empty()) throw ArgumentError("at least one training stage is required");
  for (const auto& s : config.stages) {
    if (s.epochs < 0 || !(s.learning_rate > 0.0)) {
      throw ArgumentError("stage epochs must be >= 0 and learning rate > 0");
    }
    if (s.freeze_groups < -1 || s.freeze_groups > net.num_groups()) {
      throw ArgumentError("stage " + std::to_string(s.stage) + " freezes " +
                          std::to_string(s.freeze_groups) + " parameter groups but the denoiser has " +
                          std::to_string(net.num_groups()));
    }
  }

  // Fixed probe batch: evenly strided training columns with seeded noise.
  std::vector<Index> probe_cols;
  const Index probe_n = std::min<Index>(n, std::max(1, config.probe_size));
  for (Index k = 0; k < probe_n; ++k) probe_cols.push_back(k * n / probe_n);
  const MatrixXd probe_x0 = gather(data.x0, probe_cols);
  const MatrixXd probe_cond = gather(data.cond, probe_cols);
  const auto probe_batch = draw_noised_batch(probe_x0, schedule, derive_seed(config.seed, 0xb0b));
  auto probe_loss = [&] {
    const auto c = evaluate_components(net, probe_batch, probe_x0, probe_cond);
    for (double v : {c.diff, c.flood, c.heat, c.structure, c.transport}) {
      if (!std::isfinite(v)) throw TrainingDiverged("non-finite probe loss: " + describe(c));
    }
    return combined_loss(c, config.weights);
  };

  TrainHistory history;
  history.initial_probe = probe_loss();

  Eigen::VectorXd& params = net.parameters();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(params.size());
  long long adam_step = 0;
  std::vector<Index> order(static_cast<std::size_t>(n));
  int epoch = 0;

  for (const auto& stage : config.stages) {
    const int frozen = stage.freeze_groups == -1 ? net.num_groups() / 2 : stage.freeze_groups;
    const Index trainable_begin = frozen == 0 ? 0 : net.group_range(frozen - 1).second;
    const long long batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const long long total_steps = std::max<long long>(1, batches_per_epoch * stage.epochs);
    long long stage_step = 0;

    for (int e = 0; e < stage.epochs; ++e, ++epoch) {
      const std::uint64_t epoch_seed = derive_seed(config.seed, static_cast<std::uint64_t>(epoch + 1));
      MatrixXd cond = data.cond;
      if (augment) augment(epoch, cond);
      std::iota(order.begin(), order.end(), Index{0});
      Rng shuffle_rng(epoch_seed);
      std::shuffle(order.begin(), order.end(), shuffle_rng);

      LossComponents sum;
      long long batches = 0;
      for (Index start = 0; start < n; start += config.batch_size, ++batches, ++stage_step) {
        const Index len = std::min<Index>(config.batch_size, n - start);
        std::vector<Index> cols(order.begin() + start, order.begin() + start + len);
        const MatrixXd x0 = gather(data.x0, cols);
        const MatrixXd c = gather(cond, cols);
        const auto noised = draw_noised_batch(x0, schedule, derive_seed(epoch_seed, static_cast<std::uint64_t>(batches)));
        auto bg = batch_gradient(net, noised, x0, c, config.weights);
        const auto& lc = bg.components;
        const double combined = config.weights.diff * lc.diff + config.weights.flood * lc.flood +
                                config.weights.heat * lc.heat + config.weights.structure * lc.structure +
                                config.weights.transport * lc.transport;
        if (!std::isfinite(combined) || !bg.grad.allFinite()) {
          throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batches) + " (stage " + std::to_string(stage.stage) +
                                 "): " + describe(lc));
        }
        sum.diff += lc.diff;
        sum.flood += lc.flood;
        sum.heat += lc.heat;
        sum.structure += lc.structure;
        sum.transport += lc.transport;

        const Index tn = params.size() - trainable_begin;
        if (tn == 0) continue;
        auto g = bg.grad.tail(tn);
        const double norm = g.norm();
        if (config.grad_clip > 0.0 && norm > config.grad_clip) g *= config.grad_clip / norm;
        const double lr = stage.learning_rate * 0.5 *
                          (1.0 + std::cos(std::numbers::pi * static_cast<double>(stage_step) /
                                          static_cast<double>(total_steps)));
        ++adam_step;
        const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(adam_step));
        const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam_step));
        auto pm = m.tail(tn);
        auto pv = v.tail(tn);
        auto pp = params.tail(tn);
        pm = config.beta1 * pm + (1.0 - config.beta1) * g;
        pv = config.beta2 * pv + (1.0 - config.beta2) * g.cwiseAbs2();
        pp -= lr * ((pm / bc1).array() / ((pv / bc2).array().sqrt() + config.adam_eps)).matrix() +
              lr * config.weight_decay * pp;
      }
      EpochRecord rec;
      rec.epoch = epoch;
      rec.stage = stage.stage;
      const double nb = static_cast<double>(std::max<long long>(1, batches));
      rec.components = {sum.diff / nb, sum.flood / nb, sum.heat / nb, sum.structure / nb,
                        sum.transport / nb};
      rec.combined = combined_loss(rec.components, config.weights);
      rec.probe = probe_loss();
      history.epochs.push_back(rec);
    }
  }
  net.set_trained(true);
  return history;
}

}  // namespace urbanrisk::diffusion
