#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "urbanrisk/geo.hpp"

namespace urbanrisk::repr {

struct KMeansResult {
  std::vector<int> assignment;        // cluster per point
  Eigen::MatrixXd centroids;          // k x d
  std::vector<double> objective;      // within-cluster SSE after each iteration
  int iterations = 0;
};

/// Lloyd's algorithm on the rows of points with seeded farthest-point
/// initialization. Stops at an assignment fixpoint or after max_iterations.
/// Throws ArgumentError when k < 1 or k exceeds the number of points.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int max_iterations = 100);

/// Sinusoidal encoding: even channels sin(pos / 10000^(2i/dim)), odd channels cos.
Eigen::VectorXd sinusoidal_encoding(double position, int dim);

/// One hidden layer of width model_dim with SiLU, then a linear map to model_dim.
class TokenMlp {
 public:
  TokenMlp(int input_dim, int model_dim, std::uint64_t seed);
  int input_dim() const { return static_cast<int>(w1_.cols()); }
  int model_dim() const { return static_cast<int>(w2_.rows()); }
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;

 private:
  Eigen::MatrixXd w1_, w2_;
  Eigen::VectorXd b1_, b2_;
};

struct ClusterToken {
  int cluster_id = 0;
  Eigen::VectorXd token;
  std::vector<std::string> members;
};

struct ClusterTokens {
  std::vector<ClusterToken> tokens;  // ordered by cluster id
  std::vector<int> assignment;       // cluster per input building
};

/// Spatial cluster tokens: k-means over building positions projected to local
/// meters around their centroid, then token_k = MLP(mean fused rep of members)
/// + PE(k). fused holds one row per building.
ClusterTokens cluster_tokens(std::span<const geo::LatLon> positions,
                             std::span<const std::string> ids, const Eigen::MatrixXd& fused,
                             int k, const TokenMlp& mlp, std::uint64_t seed);

}  // namespace urbanrisk::repr
