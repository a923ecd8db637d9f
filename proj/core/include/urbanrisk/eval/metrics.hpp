#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace urbanrisk::eval {

inline constexpr int kDefaultBins = 10;

// All pairwise functions throw ArgumentError on length mismatch or empty input.
double accuracy(std::span<const int> predicted, std::span<const int> truth);
// Mean F1 over classes that occur in either vector; a class with no true
// positives scores 0.
double macro_f1(std::span<const int> predicted, std::span<const int> truth);
double mae(std::span<const double> predicted, std::span<const double> truth);
double rmse(std::span<const double> predicted, std::span<const double> truth);

/// Mann-Whitney rank statistic with midranks for ties. nullopt when labels
/// hold a single class.
std::optional<double> auroc(std::span<const double> scores, std::span<const bool> labels);

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double confidence = 0.0;  // mean predicted probability; 0 for an empty bin
  double accuracy = 0.0;    // observed positive rate; 0 for an empty bin
};

// Equal-width bins over [0, 1]; p = 1 falls into the last bin.
std::vector<ReliabilityBin> reliability_bins(std::span<const double> probabilities,
                                             std::span<const bool> outcomes,
                                             int bins = kDefaultBins);
double ece(std::span<const double> probabilities, std::span<const bool> outcomes,
           int bins = kDefaultBins);

// Fraction of truths inside closed [low, high]. Throws ArgumentError for an
// inverted interval.
double interval_coverage(std::span<const double> lows, std::span<const double> highs,
                         std::span<const double> truths);

struct RiskSensitivity {
  std::size_t k = 0;                     // ceil(q% of n) items flagged
  double threshold = 0.0;                // score of the k-th ranked item
  std::optional<double> recall_at_top_q;  // nullopt without positives
  std::optional<double> fnr_high_risk;    // positives scored below threshold
};

/// Ranks by score descending with ties broken by id ascending. q is a
/// percentage in (0, 100).
RiskSensitivity risk_sensitivity(std::span<const double> scores, std::span<const bool> labels,
                                 std::span<const std::string> ids, double q);

}  // namespace urbanrisk::eval
