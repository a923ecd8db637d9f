#include "urbanrisk/repr/attention.hpp"

#include <cmath>
#include <random>
#include <string>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/random.hpp"

namespace urbanrisk::repr {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - m).exp().matrix();
    out.row(i) = e / e.sum();
  }
  return out;
}

AttentionResult scaled_dot_product_attention(const Eigen::MatrixXd& queries,
                                             const Eigen::MatrixXd& keys,
                                             const Eigen::MatrixXd& values) {
  if (keys.rows() == 0) throw ArgumentError("attention needs at least one key");
  if (queries.cols() != keys.cols()) {
    throw ArgumentError("query dim " + std::to_string(queries.cols()) + " != key dim " +
                        std::to_string(keys.cols()));
  }
  if (keys.rows() != values.rows()) {
    throw ArgumentError("key count " + std::to_string(keys.rows()) + " != value count " +
                        std::to_string(values.rows()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, keys.cols())));
  AttentionResult r;
  r.weights = softmax_rows(queries * keys.transpose() * scale);
  r.output = r.weights * values;
  return r;
}

Eigen::MatrixXd seeded_matrix(int rows, int cols, std::uint64_t seed, double gain) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, gain / std::sqrt(static_cast<double>(std::max(1, cols))));
  Eigen::MatrixXd m(rows, cols);
  // Column-major fill order is part of the seed contract.
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = n(rng);
  }
  return m;
}

CrossAttention::CrossAttention(int query_dim, std::vector<int> token_dims, int attn_dim,
                               int out_dim, std::uint64_t seed)
    : token_dims_(std::move(token_dims)), out_dim_(out_dim) {
  if (query_dim < 1 || attn_dim < 1 || out_dim < 1 || token_dims_.empty()) {
    throw ArgumentError("cross-attention dims must be positive with at least one token");
  }
  w_query_ = seeded_matrix(attn_dim, query_dim, derive_seed(seed, 0));
  for (std::size_t i = 0; i < token_dims_.size(); ++i) {
    if (token_dims_[i] < 1) throw ArgumentError("token dims must be positive");
    w_key_.push_back(seeded_matrix(attn_dim, token_dims_[i], derive_seed(seed, 1 + 2 * i)));
    w_value_.push_back(seeded_matrix(out_dim, token_dims_[i], derive_seed(seed, 2 + 2 * i)));
  }
}

AttentionResult CrossAttention::apply(const Eigen::VectorXd& query,
                                      const std::vector<Eigen::VectorXd>& tokens) const {
  if (query.size() != w_query_.cols()) {
    throw ArgumentError("query has dim " + std::to_string(query.size()) + ", expected " +
                        std::to_string(w_query_.cols()));
  }
  if (tokens.size() != token_dims_.size()) {
    throw ArgumentError("expected " + std::to_string(token_dims_.size()) + " tokens, got " +
                        std::to_string(tokens.size()));
  }
  Eigen::MatrixXd keys(tokens.size(), w_query_.rows());
  Eigen::MatrixXd values(tokens.size(), out_dim_);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].size() != token_dims_[i]) {
      throw ArgumentError("token " + std::to_string(i) + " has dim " +
                          std::to_string(tokens[i].size()) + ", expected " +
                          std::to_string(token_dims_[i]));
    }
    keys.row(static_cast<Eigen::Index>(i)) = (w_key_[i] * tokens[i]).transpose();
    values.row(static_cast<Eigen::Index>(i)) = (w_value_[i] * tokens[i]).transpose();
  }
  Eigen::MatrixXd q = (w_query_ * query).transpose();
  return scaled_dot_product_attention(q, keys, values);
}

}  // namespace urbanrisk::repr
