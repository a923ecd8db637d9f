#include "urbanrisk/repr/clustering.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/random.hpp"
#include "urbanrisk/repr/attention.hpp"

namespace urbanrisk::repr {

namespace {

double sse(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
           const std::vector<int>& assignment) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    s += (points.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return s;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iterations) {
  const auto n = points.rows();
  if (k < 1) throw ArgumentError("k must be >= 1");
  if (k > n) {
    throw ArgumentError("k = " + std::to_string(k) + " exceeds the number of points (" +
                        std::to_string(n) + ")");
  }
  if (max_iterations < 1) throw ArgumentError("max_iterations must be >= 1");

  // Farthest-point initialization from a seeded first center; ties go to the lowest index.
  Rng rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  Eigen::MatrixXd centroids(k, points.cols());
  centroids.row(0) = points.row(pick(rng));
  Eigen::VectorXd nearest = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index far = 0;
    nearest.maxCoeff(&far);
    centroids.row(c) = points.row(far);
    nearest = nearest.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  KMeansResult r;
  r.assignment.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      auto& a = r.assignment[static_cast<std::size_t>(i)];
      if (a != best) {
        a = best;
        changed = true;
      }
    }
    r.iterations = it + 1;
    if (!changed && it > 0) {
      r.objective.push_back(sse(points, centroids, r.assignment));
      break;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = r.assignment[static_cast<std::size_t>(i)];
      sums.row(a) += points.row(i);
      ++counts[static_cast<std::size_t>(a)];
    }
    // Empty clusters keep their previous center.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      }
    }
    r.objective.push_back(sse(points, centroids, r.assignment));
  }
  r.centroids = std::move(centroids);
  return r;
}

Eigen::VectorXd sinusoidal_encoding(double position, int dim) {
  if (dim < 1) throw ArgumentError("encoding dim must be >= 1");
  Eigen::VectorXd pe(dim);
  for (int i = 0; i < dim; ++i) {
    const int pair = i / 2;
    const double freq = std::pow(10000.0, -2.0 * pair / static_cast<double>(dim));
    pe(i) = (i % 2 == 0) ? std::sin(position * freq) : std::cos(position * freq);
  }
  return pe;
}

TokenMlp::TokenMlp(int input_dim, int model_dim, std::uint64_t seed) {
  if (input_dim < 1 || model_dim < 1) throw ArgumentError("token MLP dims must be positive");
  w1_ = seeded_matrix(model_dim, input_dim, derive_seed(seed, 1));
  b1_ = Eigen::VectorXd::Zero(model_dim);
  w2_ = seeded_matrix(model_dim, model_dim, derive_seed(seed, 2));
  b2_ = Eigen::VectorXd::Zero(model_dim);
}

Eigen::VectorXd TokenMlp::operator()(const Eigen::VectorXd& x) const {
  if (x.size() != w1_.cols()) throw ArgumentError("token MLP input has wrong dim");
  const Eigen::ArrayXd a = (w1_ * x + b1_).array();
  const Eigen::VectorXd h = (a / (1.0 + (-a).exp())).matrix();
  return w2_ * h + b2_;
}

ClusterTokens cluster_tokens(std::span<const geo::LatLon> positions,
                             std::span<const std::string> ids, const Eigen::MatrixXd& fused,
                             int k, const TokenMlp& mlp, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(positions.size());
  if (static_cast<Eigen::Index>(ids.size()) != n || fused.rows() != n) {
    throw ArgumentError("positions, ids and fused reps must have the same length");
  }
  if (fused.cols() != mlp.input_dim()) throw ArgumentError("fused dim does not match token MLP");
  if (k < 1 || k > n) {
    throw ArgumentError("cluster count " + std::to_string(k) + " must be within [1, " +
                        std::to_string(n) + "]");
  }
  const geo::LocalProjection proj(geo::centroid(positions));
  Eigen::MatrixXd pts(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto p = proj.to_local(positions[static_cast<std::size_t>(i)]);
    pts(i, 0) = p.x;
    pts(i, 1) = p.y;
  }
  auto km = kmeans(pts, k, seed);

  ClusterTokens out;
  out.assignment = km.assignment;
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, fused.cols());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  out.tokens.resize(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = km.assignment[static_cast<std::size_t>(i)];
    sums.row(a) += fused.row(i);
    ++counts[static_cast<std::size_t>(a)];
    out.tokens[static_cast<std::size_t>(a)].members.push_back(ids[static_cast<std::size_t>(i)]);
  }
  for (int c = 0; c < k; ++c) {
    auto& t = out.tokens[static_cast<std::size_t>(c)];
    t.cluster_id = c;
    const auto cnt = counts[static_cast<std::size_t>(c)];
    const Eigen::VectorXd mean =
        cnt > 0 ? Eigen::VectorXd(sums.row(c).transpose() / cnt) : Eigen::VectorXd::Zero(fused.cols());
    t.token = mlp(mean) + sinusoidal_encoding(c, mlp.model_dim());
  }
  return out;
}

}  // namespace urbanrisk::repr
