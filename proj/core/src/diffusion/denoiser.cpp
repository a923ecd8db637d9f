#include "urbanrisk/diffusion/denoiser.hpp"

#include <cmath>
#include <random>
#include <string>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/random.hpp"
#include "urbanrisk/repr/clustering.hpp"

namespace urbanrisk::diffusion {

using Eigen::Index;
using Eigen::MatrixXd;
using MatMap = Eigen::Map<MatrixXd>;
using ConstMatMap = Eigen::Map<const MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

namespace {

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& a) { return 1.0 / (1.0 + (-a).exp()); }

Eigen::ArrayXXd silu(const Eigen::ArrayXXd& a) { return a * sigmoid(a); }

Eigen::ArrayXXd silu_grad(const Eigen::ArrayXXd& a) {
  const Eigen::ArrayXXd s = sigmoid(a);
  return s * (1.0 + a * (1.0 - s));
}

// Offsets of the matrices within the flat parameter vector.
struct Layout {
  Index in_w, in_b;
  std::vector<Index> w1, b1, w2, b2;
  Index eps_w, eps_b, x0_w, x0_b, total;

  explicit Layout(const DenoiserConfig& c) {
    const Index h = c.hidden, d = c.target_dim, i = c.input_dim();
    Index o = 0;
    in_w = o, o += h * i;
    in_b = o, o += h;
    for (int l = 0; l < c.blocks; ++l) {
      w1.push_back(o), o += h * h;
      b1.push_back(o), o += h;
      w2.push_back(o), o += h * h;
      b2.push_back(o), o += h;
    }
    eps_w = o, o += d * h;
    eps_b = o, o += d;
    x0_w = o, o += d * h;
    x0_b = o, o += d;
    total = o;
  }
};

}  // namespace

void DenoiserConfig::validate() const {
  if (target_dim < 1 || cond_dim < 0 || time_dim < 1 || hidden < 1 || blocks < 0) {
    throw ArgumentError("invalid denoiser dimensions");
  }
}

Eigen::MatrixXd timestep_embedding(std::span<const int> steps, int dim) {
  MatrixXd out(dim, static_cast<Index>(steps.size()));
  for (std::size_t j = 0; j < steps.size(); ++j) {
    out.col(static_cast<Index>(j)) = repr::sinusoidal_encoding(steps[j], dim);
  }
  return out;
}

ResidualDenoiser::ResidualDenoiser(const DenoiserConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  const Layout L(config_);
  params_ = Eigen::VectorXd::Zero(L.total);
  Rng rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  auto fill = [&](Index offset, Index rows, Index cols, double scale) {
    for (Index k = 0; k < rows * cols; ++k) params_(offset + k) = scale * n01(rng);
  };
  const Index h = config_.hidden, d = config_.target_dim;
  fill(L.in_w, h, config_.input_dim(), 1.0 / std::sqrt(static_cast<double>(config_.input_dim())));
  for (int l = 0; l < config_.blocks; ++l) {
    fill(L.w1[l], h, h, 1.0 / std::sqrt(static_cast<double>(h)));
    fill(L.w2[l], h, h, 0.5 / std::sqrt(static_cast<double>(h) * std::max(1, config_.blocks)));
  }
  fill(L.eps_w, d, h, 0.01);
  fill(L.x0_w, d, h, 0.01);

  group_offsets_.push_back(0);
  group_offsets_.push_back(L.in_b + h);
  for (int l = 0; l < config_.blocks; ++l) group_offsets_.push_back(L.b2[l] + h);
  group_offsets_.push_back(L.total);
}

std::pair<Index, Index> ResidualDenoiser::group_range(int group) const {
  if (group < 0 || group >= num_groups()) {
    throw ArgumentError("parameter group " + std::to_string(group) + " outside [0, " +
                        std::to_string(num_groups()) + ")");
  }
  return {group_offsets_[static_cast<std::size_t>(group)],
          group_offsets_[static_cast<std::size_t>(group) + 1]};
}

struct ResidualDenoiser::Cache {
  MatrixXd u;                   // input_dim x N
  std::vector<MatrixXd> h;      // blocks + 1 hidden states
  std::vector<MatrixXd> a;      // block pre-activations
  MatrixXd g;                   // silu(h_L)
  Output out;
};

MatrixXd ResidualDenoiser::inputs(const MatrixXd& x_t, std::span<const int> steps,
                                  const MatrixXd& cond) const {
  const Index n = x_t.cols();
  if (x_t.rows() != config_.target_dim) {
    throw ArgumentError("x_t has " + std::to_string(x_t.rows()) + " rows, expected " +
                        std::to_string(config_.target_dim));
  }
  if (cond.rows() != config_.cond_dim || cond.cols() != n) {
    throw ArgumentError("conditioning is " + std::to_string(cond.rows()) + "x" +
                        std::to_string(cond.cols()) + ", expected " +
                        std::to_string(config_.cond_dim) + "x" + std::to_string(n));
  }
  if (static_cast<Index>(steps.size()) != n) throw ArgumentError("one step index per column");
  MatrixXd u(config_.input_dim(), n);
  u.topRows(config_.target_dim) = x_t;
  u.middleRows(config_.target_dim, config_.time_dim) = timestep_embedding(steps, config_.time_dim);
  u.bottomRows(config_.cond_dim) = cond;
  return u;
}

ResidualDenoiser::Cache ResidualDenoiser::run(const MatrixXd& x_t, std::span<const int> steps,
                                              const MatrixXd& cond) const {
  const Layout L(config_);
  const Index h = config_.hidden, d = config_.target_dim;
  const double* p = params_.data();
  Cache c;
  c.u = inputs(x_t, steps, cond);
  c.h.push_back((ConstMatMap(p + L.in_w, h, config_.input_dim()) * c.u).colwise() +
                ConstVecMap(p + L.in_b, h));
  for (int l = 0; l < config_.blocks; ++l) {
    MatrixXd a = (ConstMatMap(p + L.w1[l], h, h) * c.h.back()).colwise() + ConstVecMap(p + L.b1[l], h);
    const MatrixXd s = silu(a.array()).matrix();
    MatrixXd next = c.h.back() + ConstMatMap(p + L.w2[l], h, h) * s;
    next.colwise() += ConstVecMap(p + L.b2[l], h);
    c.a.push_back(std::move(a));
    c.h.push_back(std::move(next));
  }
  c.g = silu(c.h.back().array()).matrix();
  c.out.eps = (ConstMatMap(p + L.eps_w, d, h) * c.g).colwise() + ConstVecMap(p + L.eps_b, d);
  c.out.x0 = (ConstMatMap(p + L.x0_w, d, h) * c.g).colwise() + ConstVecMap(p + L.x0_b, d);
  return c;
}

ResidualDenoiser::Output ResidualDenoiser::forward(const MatrixXd& x_t, std::span<const int> steps,
                                                   const MatrixXd& cond) const {
  return run(x_t, steps, cond).out;
}

MatrixXd ResidualDenoiser::predict_eps(const MatrixXd& x_t, std::span<const int> steps,
                                       const MatrixXd& cond) const {
  return run(x_t, steps, cond).out.eps;
}

Eigen::VectorXd ResidualDenoiser::backward(const MatrixXd& x_t, std::span<const int> steps,
                                           const MatrixXd& cond, const MatrixXd& d_eps,
                                           const MatrixXd& d_x0) const {
  const Layout L(config_);
  const Index h = config_.hidden, d = config_.target_dim;
  const double* p = params_.data();
  const Cache c = run(x_t, steps, cond);
  if (d_eps.rows() != d || d_eps.cols() != x_t.cols() || d_x0.rows() != d ||
      d_x0.cols() != x_t.cols()) {
    throw ArgumentError("upstream gradients must match the output shape");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  double* gp = grad.data();

  MatMap(gp + L.eps_w, d, h) = d_eps * c.g.transpose();
  Eigen::Map<Eigen::VectorXd>(gp + L.eps_b, d) = d_eps.rowwise().sum();
  MatMap(gp + L.x0_w, d, h) = d_x0 * c.g.transpose();
  Eigen::Map<Eigen::VectorXd>(gp + L.x0_b, d) = d_x0.rowwise().sum();

  MatrixXd dh = ConstMatMap(p + L.eps_w, d, h).transpose() * d_eps +
                ConstMatMap(p + L.x0_w, d, h).transpose() * d_x0;
  dh = (dh.array() * silu_grad(c.h.back().array())).matrix();

  for (int l = config_.blocks - 1; l >= 0; --l) {
    const MatrixXd s = silu(c.a[static_cast<std::size_t>(l)].array()).matrix();
    MatMap(gp + L.w2[l], h, h) = dh * s.transpose();
    Eigen::Map<Eigen::VectorXd>(gp + L.b2[l], h) = dh.rowwise().sum();
    const MatrixXd da = ((ConstMatMap(p + L.w2[l], h, h).transpose() * dh).array() *
                         silu_grad(c.a[static_cast<std::size_t>(l)].array()))
                            .matrix();
    MatMap(gp + L.w1[l], h, h) = da * c.h[static_cast<std::size_t>(l)].transpose();
    Eigen::Map<Eigen::VectorXd>(gp + L.b1[l], h) = da.rowwise().sum();
    dh += ConstMatMap(p + L.w1[l], h, h).transpose() * da;
  }
  MatMap(gp + L.in_w, h, config_.input_dim()) = dh * c.u.transpose();
  Eigen::Map<Eigen::VectorXd>(gp + L.in_b, h) = dh.rowwise().sum();
  return grad;
}

nlohmann::json ResidualDenoiser::to_json() const {
  return {{"target_dim", config_.target_dim},
          {"cond_dim", config_.cond_dim},
          {"time_dim", config_.time_dim},
          {"hidden", config_.hidden},
          {"blocks", config_.blocks},
          {"trained", trained_},
          {"parameters", std::vector<double>(params_.data(), params_.data() + params_.size())}};
}

ResidualDenoiser ResidualDenoiser::from_json(const nlohmann::json& j) {
  try {
    DenoiserConfig c{j.at("target_dim").get<int>(), j.at("cond_dim").get<int>(),
                     j.at("time_dim").get<int>(), j.at("hidden").get<int>(),
                     j.at("blocks").get<int>()};
    ResidualDenoiser d(c, 0);
    const auto values = j.at("parameters").get<std::vector<double>>();
    if (static_cast<Index>(values.size()) != d.params_.size()) {
      throw FormatError("denoiser checkpoint has " + std::to_string(values.size()) +
                        " parameters, expected " + std::to_string(d.params_.size()));
    }
    d.params_ = ConstVecMap(values.data(), static_cast<Index>(values.size()));
    d.trained_ = j.at("trained").get<bool>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed denoiser checkpoint: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("invalid denoiser checkpoint: ") + e.what());
  }
}

}  // namespace urbanrisk::diffusion
