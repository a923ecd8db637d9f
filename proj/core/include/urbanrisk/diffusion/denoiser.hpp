#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace urbanrisk::diffusion {

/// Noise predictor eps_theta(x_t, t, c). Batches are column-wise: x_t is
/// target_dim x N, cond is cond_dim x N and steps holds N step indices.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual int target_dim() const = 0;
  virtual int cond_dim() const = 0;
  virtual Eigen::MatrixXd predict_eps(const Eigen::MatrixXd& x_t, std::span<const int> steps,
                                      const Eigen::MatrixXd& cond) const = 0;
  virtual bool trained() const { return true; }
};

struct DenoiserConfig {
  int target_dim = 4;
  int cond_dim = 0;
  int time_dim = 16;
  int hidden = 64;
  int blocks = 3;

  int input_dim() const { return target_dim + time_dim + cond_dim; }
  void validate() const;
  bool operator==(const DenoiserConfig&) const = default;
};

/// Residual feed-forward denoiser:
///   h_0 = W_in [x_t; temb(t); c] + b_in
///   h_l = h_{l-1} + W2_l silu(W1_l h_{l-1} + b1_l) + b2_l
///   eps = W_eps silu(h_L) + b_eps,   x0 = W_x0 silu(h_L) + b_x0
/// The x0 head feeds the per-task losses. Parameters live in one flat vector
/// split into groups: input layer, one group per block, output heads.
class ResidualDenoiser : public NoisePredictor {
 public:
  ResidualDenoiser(const DenoiserConfig& config, std::uint64_t seed);

  int target_dim() const override { return config_.target_dim; }
  int cond_dim() const override { return config_.cond_dim; }
  bool trained() const override { return trained_; }
  void set_trained(bool v) { trained_ = v; }
  const DenoiserConfig& config() const { return config_; }

  struct Output {
    Eigen::MatrixXd eps;
    Eigen::MatrixXd x0;
  };
  Output forward(const Eigen::MatrixXd& x_t, std::span<const int> steps,
                 const Eigen::MatrixXd& cond) const;
  Eigen::MatrixXd predict_eps(const Eigen::MatrixXd& x_t, std::span<const int> steps,
                              const Eigen::MatrixXd& cond) const override;

  /// Gradient of sum(d_eps .* eps) + sum(d_x0 .* x0) with respect to the
  /// flat parameters, i.e. backprop of upstream gradients through one forward pass.
  Eigen::VectorXd backward(const Eigen::MatrixXd& x_t, std::span<const int> steps,
                           const Eigen::MatrixXd& cond, const Eigen::MatrixXd& d_eps,
                           const Eigen::MatrixXd& d_x0) const;

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  int num_groups() const { return config_.blocks + 2; }
  // [begin, end) offsets of a parameter group in the flat vector.
  std::pair<Eigen::Index, Eigen::Index> group_range(int group) const;

  nlohmann::json to_json() const;
  static ResidualDenoiser from_json(const nlohmann::json& j);  // throws FormatError

 private:
  struct Cache;
  Cache run(const Eigen::MatrixXd& x_t, std::span<const int> steps,
            const Eigen::MatrixXd& cond) const;
  Eigen::MatrixXd inputs(const Eigen::MatrixXd& x_t, std::span<const int> steps,
                         const Eigen::MatrixXd& cond) const;

  DenoiserConfig config_;
  Eigen::VectorXd params_;
  std::vector<Eigen::Index> group_offsets_;  // size num_groups + 1
  bool trained_ = false;
};

// Sinusoidal timestep embeddings, one column per step.
Eigen::MatrixXd timestep_embedding(std::span<const int> steps, int dim);

}  // namespace urbanrisk::diffusion
