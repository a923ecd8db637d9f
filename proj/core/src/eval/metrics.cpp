#include "urbanrisk/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::eval {

namespace {

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw ArgumentError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  if (a == 0) throw ArgumentError("metric of an empty set");
}

void check_probabilities(std::span<const double> p) {
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("probabilities must lie in [0, 1]");
  }
}

}  // namespace

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  check_sizes(predicted.size(), truth.size());
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double macro_f1(std::span<const int> predicted, std::span<const int> truth) {
  check_sizes(predicted.size(), truth.size());
  std::set<int> classes(truth.begin(), truth.end());
  classes.insert(predicted.begin(), predicted.end());
  double sum = 0.0;
  for (int c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool p = predicted[i] == c, t = truth[i] == c;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    if (tp > 0) sum += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  }
  return sum / static_cast<double>(classes.size());
}

double mae(std::span<const double> predicted, std::span<const double> truth) {
  check_sizes(predicted.size(), truth.size());
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(predicted[i] - truth[i]);
  return s / static_cast<double>(truth.size());
}

double rmse(std::span<const double> predicted, std::span<const double> truth) {
  check_sizes(predicted.size(), truth.size());
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += (predicted[i] - truth[i]) * (predicted[i] - truth[i]);
  return std::sqrt(s / static_cast<double>(truth.size()));
}

std::optional<double> auroc(std::span<const double> scores, std::span<const bool> labels) {
  check_sizes(scores.size(), labels.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i]) {
      pos += 1.0;
      rank_sum += rank[i];
    }
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) return std::nullopt;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

std::vector<ReliabilityBin> reliability_bins(std::span<const double> probabilities,
                                             std::span<const bool> outcomes, int bins) {
  check_sizes(probabilities.size(), outcomes.size());
  check_probabilities(probabilities);
  if (bins < 1) throw ArgumentError("bins must be >= 1");
  std::vector<ReliabilityBin> out(static_cast<std::size_t>(bins));
  std::vector<double> conf(out.size()), acc(out.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const auto b = std::min(static_cast<std::size_t>(probabilities[i] * bins), out.size() - 1);
    ++out[b].count;
    conf[b] += probabilities[i];
    acc[b] += outcomes[i] ? 1.0 : 0.0;
  }
  for (std::size_t b = 0; b < out.size(); ++b) {
    out[b].lower = static_cast<double>(b) / bins;
    out[b].upper = static_cast<double>(b + 1) / bins;
    if (out[b].count > 0) {
      out[b].confidence = conf[b] / static_cast<double>(out[b].count);
      out[b].accuracy = acc[b] / static_cast<double>(out[b].count);
    }
  }
  return out;
}

double ece(std::span<const double> probabilities, std::span<const bool> outcomes, int bins) {
  const auto rb = reliability_bins(probabilities, outcomes, bins);
  const double n = static_cast<double>(probabilities.size());
  double e = 0.0;
  for (const auto& b : rb) {
    if (b.count > 0) e += static_cast<double>(b.count) / n * std::abs(b.accuracy - b.confidence);
  }
  return std::clamp(e, 0.0, 1.0);
}

double interval_coverage(std::span<const double> lows, std::span<const double> highs,
                         std::span<const double> truths) {
  check_sizes(lows.size(), truths.size());
  check_sizes(highs.size(), truths.size());
  std::size_t inside = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (lows[i] > highs[i]) throw ArgumentError("inverted interval at index " + std::to_string(i));
    inside += lows[i] <= truths[i] && truths[i] <= highs[i];
  }
  return static_cast<double>(inside) / static_cast<double>(truths.size());
}

RiskSensitivity risk_sensitivity(std::span<const double> scores, std::span<const bool> labels,
                                 std::span<const std::string> ids, double q) {
  check_sizes(scores.size(), labels.size());
  check_sizes(ids.size(), labels.size());
  if (!(q > 0.0 && q < 100.0)) throw ArgumentError("q must be a percentage in (0, 100)");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  RiskSensitivity out;
  out.k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(n) - 1e-9)));
  out.threshold = scores[order[out.k - 1]];
  std::size_t positives = 0, caught = 0, missed = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto i = order[r];
    if (!labels[i]) continue;
    ++positives;
    caught += r < out.k;
    missed += scores[i] < out.threshold;
  }
  if (positives > 0) {
    out.recall_at_top_q = static_cast<double>(caught) / static_cast<double>(positives);
    out.fnr_high_risk = static_cast<double>(missed) / static_cast<double>(positives);
  }
  return out;
}

}  // namespace urbanrisk::eval
