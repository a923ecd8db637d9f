#pragma once

// Reference implementations used only by tests. They share no code with the
// library beyond its data types.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "urbanrisk/diffusion/denoiser.hpp"
#include "urbanrisk/diffusion/schedule.hpp"
#include "urbanrisk/graph/network.hpp"

namespace urbanrisk::testing {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct WeightedArc {
  int from = 0;
  int to = 0;
  double weight = 0.0;
};

// Single-source costs by |V| - 1 rounds of relaxation.
std::vector<double> bellman_ford(int num_nodes, std::span<const WeightedArc> arcs, int origin);

// Retained edges of a conditioned network with weight travel_time x multiplier.
std::vector<WeightedArc> retained_arcs(const graph::ConditionedNetwork& cn);

// Min over destinations of the Bellman-Ford cost; +inf when none is reachable.
double bf_travel_time(const graph::ConditionedNetwork& cn, int origin, std::span<const graph::NodeIndex> dests);

struct PlainArc {
  int from = 0;
  int to = 0;
};

/// Largest set of pairwise arc-disjoint source->sink paths, found by listing
/// every simple path as an arc bitmask and searching all packings. Intended
/// for graphs with at most ~20 arcs.
int exhaustive_disjoint_paths(int num_nodes, std::span<const PlainArc> arcs, int source, int sink);

// Edmonds-Karp on an adjacency-matrix residual graph with unit capacity per arc.
int edmonds_karp(int num_nodes, std::span<const PlainArc> arcs, int source, int sink);

std::vector<PlainArc> retained_plain_arcs(const graph::ConditionedNetwork& cn);

/// Exact noise predictor for x_0 ~ N(mu, sigma^2) in one dimension:
/// E[eps | x_t] = sqrt(1 - ab) (x_t - sqrt(ab) mu) / (ab sigma^2 + 1 - ab).
class GaussianEpsOracle : public diffusion::NoisePredictor {
 public:
  GaussianEpsOracle(double mu, double sigma, const diffusion::NoiseSchedule& schedule)
      : mu_(mu), var_(sigma * sigma), schedule_(schedule) {}
  int target_dim() const override { return 1; }
  int cond_dim() const override { return 0; }
  Eigen::MatrixXd predict_eps(const Eigen::MatrixXd& x_t, std::span<const int> steps,
                              const Eigen::MatrixXd& cond) const override;

 private:
  double mu_;
  double var_;
  const diffusion::NoiseSchedule& schedule_;
};

// Population mean and variance.
struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};
Moments moments(std::span<const double> xs);

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b);

}  // namespace urbanrisk::testing
