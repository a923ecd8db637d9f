#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanrisk/eval/metrics.hpp"

namespace urbanrisk::eval {

inline constexpr int kReportSchemaVersion = 1;

// Class index of a value given ascending class edges: the number of edges <= value.
int value_class(double value, std::span<const double> edges);

/// Per-item evaluation inputs. All populated vectors must share one length;
/// the accessibility vectors may be left empty.
struct MetricInputs {
  std::vector<std::string> ids;
  std::vector<int> true_class;
  std::vector<int> predicted_class;
  std::vector<double> true_value;       // e.g. flood depth
  std::vector<double> predicted_value;  // posterior mean
  std::vector<double> prob_high;        // P(high-risk class)
  std::vector<std::uint8_t> is_high;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  std::vector<std::uint8_t> reachable;
  std::vector<double> travel_time_s;  // may be +inf
  std::vector<int> redundancy;

  std::size_t size() const { return ids.size(); }
  void validate() const;  // throws ArgumentError
  MetricInputs subset(std::span<const std::size_t> rows) const;
};

struct MetricReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> auroc;
  double q = 0.0;
  std::optional<double> recall_at_top_q;
  std::optional<double> fnr_high_risk;
  double ece = 0.0;
  double coverage_90 = 0.0;
  std::vector<ReliabilityBin> reliability;
  std::optional<double> reachability_rate;
  std::optional<double> mean_hazard_T;
  std::optional<double> mean_K;
};

MetricReport compute_report(const MetricInputs& in, double q, int bins = kDefaultBins);

struct SubgroupReport {
  std::map<std::string, MetricReport> strata;
  std::vector<std::string> flagged;      // fewer than 2 records; excluded from gaps
  std::map<std::string, double> gaps;    // metric -> max - min over eligible strata
};

// strata[i] labels item i.
SubgroupReport subgroup_report(const MetricInputs& in, std::span<const std::string> strata, double q,
                               int bins = kDefaultBins);

nlohmann::json report_to_json(const MetricReport& r);
nlohmann::json subgroup_to_json(const SubgroupReport& s);
// bin,lower,upper,count,confidence,accuracy
std::string reliability_csv(const MetricReport& r);

}  // namespace urbanrisk::eval
