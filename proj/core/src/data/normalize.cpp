#include "urbanrisk/data/normalize.hpp"

#include <cmath>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::data {

std::string_view partition_name(Partition p) {
  switch (p) {
    case Partition::kTrain: return "train";
    case Partition::kVal: return "val";
    case Partition::kTest: return "test";
  }
  return "unknown";
}

std::optional<Partition> parse_partition(std::string_view s) {
  if (s == "train") return Partition::kTrain;
  if (s == "val") return Partition::kVal;
  if (s == "test") return Partition::kTest;
  return std::nullopt;
}

namespace {

// Welford accumulator.
struct Moments {
  double n = 0.0, mean = 0.0, m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }

  AffineStat finish() const {
    AffineStat s;
    s.mean = mean;
    const double var = n > 0.0 ? m2 / n : 0.0;
    const double sd = std::sqrt(std::max(var, 0.0));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      s.scale = 1.0;
      s.zero_variance = true;
    } else {
      s.scale = sd;
    }
    return s;
  }
};

}  // namespace

NormalizationStats fit_normalization(std::span<const BuildingRecord> records,
                                     const PartitionMap& partitions) {
  std::map<std::string, Moments, std::less<>> feature_moments;
  Moments elevation;
  std::array<Moments, TargetVector::kSize> targets;
  std::size_t n_train = 0;

  for (const auto& r : records) {
    auto it = partitions.find(r.id);
    if (it == partitions.end()) throw ArgumentError("record " + r.id + " has no split label");
    if (it->second != Partition::kTrain) continue;
    ++n_train;
    elevation.add(r.elevation);
    const auto t = r.targets.to_array();
    for (std::size_t k = 0; k < t.size(); ++k) targets[k].add(t[k]);
    for (auto g : kAllFeatureGroups) {
      if (r.is_missing(g)) continue;
      for (const auto& [name, v] : r.group(g)) feature_moments[feature_key(g, name)].add(v);
    }
  }
  if (n_train == 0) throw ArgumentError("normalization requires at least one train record");

  NormalizationStats stats;
  for (const auto& [key, m] : feature_moments) {
    auto s = m.finish();
    if (s.zero_variance) stats.zero_variance.push_back(key);
    stats.features.emplace(key, s);
  }
  stats.elevation = elevation.finish();
  if (stats.elevation.zero_variance) stats.zero_variance.push_back("elevation");
  for (std::size_t k = 0; k < targets.size(); ++k) {
    stats.targets[k] = targets[k].finish();
    if (stats.targets[k].zero_variance) {
      stats.zero_variance.push_back("targets." + std::string(kTargetNames[k]));
    }
  }
  return stats;
}

namespace {

template <typename Fn>
void for_each_feature(std::vector<BuildingRecord>& records, const NormalizationStats& stats,
                      Fn&& fn) {
  for (auto& r : records) {
    r.elevation = fn(stats.elevation, r.elevation);
    for (auto g : kAllFeatureGroups) {
      if (r.is_missing(g)) continue;
      for (auto& [name, v] : r.group(g)) {
        auto it = stats.features.find(feature_key(g, name));
        // Features never seen in train pass through unchanged.
        if (it == stats.features.end()) continue;
        v = fn(it->second, v);
      }
    }
  }
}

}  // namespace

void apply_normalization(std::vector<BuildingRecord>& records, const NormalizationStats& stats) {
  for_each_feature(records, stats, [](const AffineStat& s, double x) { return s.apply(x); });
}

void invert_normalization(std::vector<BuildingRecord>& records, const NormalizationStats& stats) {
  for_each_feature(records, stats, [](const AffineStat& s, double z) { return s.invert(z); });
}

CityDataset normalize(const CityDataset& dataset, const PartitionMap& partitions) {
  CityDataset out = dataset;
  auto stats = fit_normalization(out.records, partitions);
  apply_normalization(out.records, stats);
  out.normalization = std::move(stats);
  return out;
}

CityDataset denormalize(const CityDataset& dataset) {
  if (!dataset.normalization) throw StateError("dataset is not normalized");
  CityDataset out = dataset;
  invert_normalization(out.records, *out.normalization);
  out.normalization.reset();
  return out;
}

}  // namespace urbanrisk::data
