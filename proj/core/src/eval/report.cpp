#include "urbanrisk/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::eval {

using nlohmann::json;

int value_class(double value, std::span<const double> edges) {
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

void MetricInputs::validate() const {
  const std::size_t n = ids.size();
  if (n == 0) throw ArgumentError("no items to evaluate");
  auto same = [n](std::size_t m, const char* name) {
    if (m != n) throw ArgumentError(std::string("metric input ") + name + " has the wrong length");
  };
  same(true_class.size(), "true_class");
  same(predicted_class.size(), "predicted_class");
  same(true_value.size(), "true_value");
  same(predicted_value.size(), "predicted_value");
  same(prob_high.size(), "prob_high");
  same(is_high.size(), "is_high");
  same(ci_low.size(), "ci_low");
  same(ci_high.size(), "ci_high");
  if (!reachable.empty() || !travel_time_s.empty() || !redundancy.empty()) {
    same(reachable.size(), "reachable");
    same(travel_time_s.size(), "travel_time_s");
    same(redundancy.size(), "redundancy");
  }
}

MetricInputs MetricInputs::subset(std::span<const std::size_t> rows) const {
  MetricInputs out;
  auto pick = [&rows](const auto& src, auto& dst) {
    if (src.empty()) return;
    for (auto r : rows) dst.push_back(src.at(r));
  };
  pick(ids, out.ids);
  pick(true_class, out.true_class);
  pick(predicted_class, out.predicted_class);
  pick(true_value, out.true_value);
  pick(predicted_value, out.predicted_value);
  pick(prob_high, out.prob_high);
  pick(is_high, out.is_high);
  pick(ci_low, out.ci_low);
  pick(ci_high, out.ci_high);
  pick(reachable, out.reachable);
  pick(travel_time_s, out.travel_time_s);
  pick(redundancy, out.redundancy);
  return out;
}

MetricReport compute_report(const MetricInputs& in, double q, int bins) {
  in.validate();
  const std::size_t n = in.size();
  auto flags = std::make_unique<bool[]>(n);
  for (std::size_t i = 0; i < n; ++i) flags[i] = in.is_high[i] != 0;
  const std::span<const bool> high(flags.get(), n);

  MetricReport r;
  r.n = n;
  r.accuracy = accuracy(in.predicted_class, in.true_class);
  r.macro_f1 = macro_f1(in.predicted_class, in.true_class);
  r.mae = mae(in.predicted_value, in.true_value);
  r.rmse = rmse(in.predicted_value, in.true_value);
  r.auroc = auroc(in.prob_high, high);
  r.q = q;
  const auto rs = risk_sensitivity(in.prob_high, high, in.ids, q);
  r.recall_at_top_q = rs.recall_at_top_q;
  r.fnr_high_risk = rs.fnr_high_risk;
  r.reliability = reliability_bins(in.prob_high, high, bins);
  r.ece = ece(in.prob_high, high, bins);
  r.coverage_90 = interval_coverage(in.ci_low, in.ci_high, in.true_value);
  if (!in.reachable.empty()) {
    double reach = 0.0, k = 0.0, t = 0.0;
    std::size_t finite = 0;
    for (std::size_t i = 0; i < n; ++i) {
      reach += in.reachable[i] ? 1.0 : 0.0;
      k += in.redundancy[i];
      if (std::isfinite(in.travel_time_s[i])) {
        t += in.travel_time_s[i];
        ++finite;
      }
    }
    r.reachability_rate = reach / static_cast<double>(n);
    r.mean_K = k / static_cast<double>(n);
    if (finite > 0) r.mean_hazard_T = t / static_cast<double>(finite);
  }
  return r;
}

namespace {

std::map<std::string, std::optional<double>> gap_metrics(const MetricReport& r) {
  return {{"accuracy", r.accuracy},
          {"macro_f1", r.macro_f1},
          {"mae", r.mae},
          {"rmse", r.rmse},
          {"auroc", r.auroc},
          {"recall_at_top_q", r.recall_at_top_q},
          {"fnr_high_risk", r.fnr_high_risk},
          {"ece", r.ece},
          {"coverage_90", r.coverage_90},
          {"reachability_rate", r.reachability_rate}};
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

SubgroupReport subgroup_report(const MetricInputs& in, std::span<const std::string> strata, double q,
                               int bins) {
  in.validate();
  if (strata.size() != in.size()) throw ArgumentError("one stratum label per item is required");
  std::map<std::string, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < strata.size(); ++i) rows[strata[i]].push_back(i);

  SubgroupReport out;
  std::map<std::string, std::pair<double, double>> range;
  for (const auto& [label, idx] : rows) {
    auto rep = compute_report(in.subset(idx), q, bins);
    if (idx.size() < 2) {
      out.flagged.push_back(label);
    } else {
      for (const auto& [metric, v] : gap_metrics(rep)) {
        if (!v) continue;
        auto [it, fresh] = range.try_emplace(metric, *v, *v);
        if (!fresh) {
          it->second.first = std::min(it->second.first, *v);
          it->second.second = std::max(it->second.second, *v);
        }
      }
    }
    out.strata.emplace(label, std::move(rep));
  }
  // A gap needs at least two eligible strata reporting the metric.
  for (const auto& [metric, mm] : range) {
    std::size_t reporting = 0;
    for (const auto& [label, rep] : out.strata) {
      if (rows[label].size() >= 2 && gap_metrics(rep).at(metric)) ++reporting;
    }
    if (reporting >= 2) out.gaps[metric] = mm.second - mm.first;
  }
  return out;
}

json report_to_json(const MetricReport& r) {
  json bins = json::array();
  for (const auto& b : r.reliability) {
    bins.push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count},
                    {"confidence", b.confidence}, {"accuracy", b.accuracy}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"n", r.n},
          {"accuracy", r.accuracy},
          {"macro_f1", r.macro_f1},
          {"mae", r.mae},
          {"rmse", r.rmse},
          {"auroc", opt(r.auroc)},
          {"q", r.q},
          {"recall_at_top_q", opt(r.recall_at_top_q)},
          {"fnr_high_risk", opt(r.fnr_high_risk)},
          {"ece", r.ece},
          {"coverage_90", r.coverage_90},
          {"reliability", bins},
          {"reachability_rate", opt(r.reachability_rate)},
          {"mean_hazard_T", opt(r.mean_hazard_T)},
          {"mean_K", opt(r.mean_K)}};
}

json subgroup_to_json(const SubgroupReport& s) {
  json strata = json::object();
  for (const auto& [label, rep] : s.strata) strata[label] = report_to_json(rep);
  return {{"strata", strata}, {"flagged", s.flagged}, {"gaps", s.gaps}};
}

std::string reliability_csv(const MetricReport& r) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "bin,lower,upper,count,confidence,accuracy\n";
  for (std::size_t b = 0; b < r.reliability.size(); ++b) {
    const auto& x = r.reliability[b];
    out << b << ',' << x.lower << ',' << x.upper << ',' << x.count << ',' << x.confidence << ','
        << x.accuracy << '\n';
  }
  return out.str();
}

}  // namespace urbanrisk::eval
