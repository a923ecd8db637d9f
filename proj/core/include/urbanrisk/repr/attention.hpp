#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace urbanrisk::repr {

struct AttentionResult {
  Eigen::MatrixXd output;   // n_queries x d_value
  Eigen::MatrixXd weights;  // n_queries x n_keys, rows on the probability simplex
};

/// softmax(Q K^T / sqrt(d_k)) V with one row per query/key token. Throws
/// ArgumentError on inconsistent shapes or an empty key set.
AttentionResult scaled_dot_product_attention(const Eigen::MatrixXd& queries,
                                             const Eigen::MatrixXd& keys,
                                             const Eigen::MatrixXd& values);

// Row-wise numerically stable softmax.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// Single-head cross-attention from one query vector over a set of key/value
/// tokens that may differ in dimension. Each token source has its own key and
/// value projection into the shared attention space.
class CrossAttention {
 public:
  CrossAttention(int query_dim, std::vector<int> token_dims, int attn_dim, int out_dim,
                 std::uint64_t seed);

  int query_dim() const { return static_cast<int>(w_query_.cols()); }
  int out_dim() const { return out_dim_; }
  const std::vector<int>& token_dims() const { return token_dims_; }

  AttentionResult apply(const Eigen::VectorXd& query,
                        const std::vector<Eigen::VectorXd>& tokens) const;

 private:
  std::vector<int> token_dims_;
  int out_dim_;
  Eigen::MatrixXd w_query_;               // attn x query
  std::vector<Eigen::MatrixXd> w_key_;    // attn x token
  std::vector<Eigen::MatrixXd> w_value_;  // out x token
};

// N(0, 1/cols) entries from a seeded generator.
Eigen::MatrixXd seeded_matrix(int rows, int cols, std::uint64_t seed, double gain = 1.0);

}  // namespace urbanrisk::repr
