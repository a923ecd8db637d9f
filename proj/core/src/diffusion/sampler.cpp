#include "urbanrisk/diffusion/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/random.hpp"

namespace urbanrisk::diffusion {

using Eigen::Index;
using Eigen::MatrixXd;

namespace {

MatrixXd ddim_chunk(const NoisePredictor& denoiser, const NoiseSchedule& schedule,
                    const std::vector<int>& steps, const MatrixXd& cond, MatrixXd x,
                    const SamplerOptions& options) {
  std::vector<int> t_col(static_cast<std::size_t>(x.cols()));
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const int t = steps[k];
    const int t_next = k + 1 < steps.size() ? steps[k + 1] : 0;
    std::fill(t_col.begin(), t_col.end(), t);
    const MatrixXd eps = denoiser.predict_eps(x, t_col, cond);
    const double ab = schedule.alpha_bar(t);
    const double ab_next = schedule.alpha_bar(t_next);
    MatrixXd x0 = (x - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
    if (options.clip_x0) x0 = x0.cwiseMax(-*options.clip_x0).cwiseMin(*options.clip_x0);
    x = t_next == 0 ? x0 : MatrixXd(std::sqrt(ab_next) * x0 + std::sqrt(1.0 - ab_next) * eps);
  }
  return x;
}

}  // namespace

MatrixXd ddim_sample_batch(const NoisePredictor& denoiser, const NoiseSchedule& schedule,
                           const MatrixXd& cond, const MatrixXd& x_T,
                           const SamplerOptions& options) {
  if (!denoiser.trained()) throw StateError("denoiser has not been trained");
  const auto steps = sampling_steps(schedule.steps(), options.steps);
  if (x_T.rows() != denoiser.target_dim()) throw ArgumentError("x_T rows must equal the target dim");
  if (cond.rows() != denoiser.cond_dim() || cond.cols() != x_T.cols()) {
    throw ArgumentError("conditioning must have cond_dim rows and one column per sample");
  }
  const Index chunk = std::max(1, options.chunk);
  MatrixXd out(x_T.rows(), x_T.cols());
  for (Index start = 0; start < x_T.cols(); start += chunk) {
    const Index len = std::min(chunk, x_T.cols() - start);
    out.middleCols(start, len) = ddim_chunk(denoiser, schedule, steps, cond.middleCols(start, len),
                                            x_T.middleCols(start, len), options);
  }
  return out;
}

Eigen::VectorXd member_noise(std::uint64_t seed, int member, int dim) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(member)));
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = n01(rng);
  return v;
}

Eigen::VectorXd ddim_sample(const NoisePredictor& denoiser, const NoiseSchedule& schedule,
                            const Eigen::VectorXd& cond, std::uint64_t seed,
                            const SamplerOptions& options) {
  const MatrixXd x_T = member_noise(seed, 0, denoiser.target_dim());
  return ddim_sample_batch(denoiser, schedule, cond, x_T, options).col(0);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ArgumentError("percentile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("percentile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

SampleSet summarize_samples(MatrixXd samples, double level) {
  if (samples.rows() < 2) throw ArgumentError("a sample set needs at least 2 samples");
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("credible level must be in (0, 1)");
  SampleSet s;
  const Index d = samples.cols();
  s.mean = samples.colwise().mean().transpose();
  s.ci_low.resize(d);
  s.ci_high.resize(d);
  const double tail = (1.0 - level) / 2.0;
  for (Index j = 0; j < d; ++j) {
    std::vector<double> col(samples.col(j).data(), samples.col(j).data() + samples.rows());
    s.ci_low(j) = std::min(percentile(col, tail), s.mean(j));
    s.ci_high(j) = std::max(percentile(col, 1.0 - tail), s.mean(j));
  }
  s.samples = std::move(samples);
  return s;
}

nlohmann::json sample_summary_json(const SampleSet& s, bool include_samples) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j = {{"n", s.size()}, {"mean", vec(s.mean)}, {"ci_low", vec(s.ci_low)}, {"ci_high", vec(s.ci_high)}};
  if (include_samples) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < s.samples.rows(); ++i) rows.push_back(vec(s.samples.row(i).transpose()));
    j["samples"] = std::move(rows);
  }
  return j;
}

SampleSet ensemble_sample(const NoisePredictor& denoiser, const NoiseSchedule& schedule,
                          const Eigen::VectorXd& cond, int n, std::uint64_t seed,
                          const SamplerOptions& options) {
  const std::uint64_t seeds[] = {seed};
  return ensemble_sample_many(denoiser, schedule, cond, seeds, n, options).front();
}

std::vector<SampleSet> ensemble_sample_many(const NoisePredictor& denoiser,
                                            const NoiseSchedule& schedule, const MatrixXd& cond,
                                            std::span<const std::uint64_t> seeds, int n,
                                            const SamplerOptions& options) {
  if (n < 2) throw ArgumentError("ensemble size must be >= 2");
  if (static_cast<Index>(seeds.size()) != cond.cols()) {
    throw ArgumentError("one seed per conditioning column");
  }
  const Index b = cond.cols();
  const int d = denoiser.target_dim();
  MatrixXd x_T(d, b * n);
  MatrixXd cond_rep(cond.rows(), b * n);
  for (Index k = 0; k < b; ++k) {
    for (int i = 0; i < n; ++i) {
      x_T.col(k * n + i) = member_noise(seeds[static_cast<std::size_t>(k)], i, d);
      cond_rep.col(k * n + i) = cond.col(k);
    }
  }
  const MatrixXd x0 = ddim_sample_batch(denoiser, schedule, cond_rep, x_T, options);
  std::vector<SampleSet> out;
  out.reserve(static_cast<std::size_t>(b));
  for (Index k = 0; k < b; ++k) {
    out.push_back(summarize_samples(x0.middleCols(k * n, n).transpose()));
  }
  return out;
}

}  // namespace urbanrisk::diffusion
