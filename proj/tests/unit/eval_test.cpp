#include <cmath>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "urbanrisk/errors.hpp"
#include "urbanrisk/eval/metrics.hpp"
#include "urbanrisk/eval/report.hpp"
#include "urbanrisk/eval/splits.hpp"

namespace urbanrisk::eval {
namespace {

// P(score_pos > score_neg) + 0.5 P(tie) over all pairs.
double pairwise_auroc(const std::vector<double>& s, const std::vector<bool>& y) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!y[i] || y[j]) continue;
      den += 1;
      num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return num / den;
}

// std::vector<bool> has no contiguous storage.
std::unique_ptr<bool[]> as_array(const std::vector<bool>& v) {
  auto a = std::make_unique<bool[]>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) a[i] = v[i];
  return a;
}

TEST(Metrics, ClassificationAndRegression) {
  const std::vector<int> p = {0, 1, 1, 2}, t = {0, 1, 2, 2};
  EXPECT_DOUBLE_EQ(accuracy(p, t), 0.75);
  // class 0: F1 1; class 1: P 1/2 R 1 -> 2/3; class 2: P 1 R 1/2 -> 2/3
  EXPECT_NEAR(macro_f1(p, t), (1.0 + 2.0 / 3.0 + 2.0 / 3.0) / 3.0, 1e-15);
  const std::vector<double> a = {1, 2, 3}, b = {1, 4, 0};
  EXPECT_DOUBLE_EQ(mae(a, b), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(rmse(a, b), std::sqrt(13.0 / 3.0));
  EXPECT_THROW(mae(a, std::vector<double>{1.0}), ArgumentError);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), ArgumentError);
}

TEST(Metrics, AurocMatchesPairwiseCount) {
  Rng rng(1);
  std::uniform_int_distribution<int> coarse(0, 5);  // many ties
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 40);
    std::vector<double> s(n);
    std::vector<bool> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse(rng);
      y[i] = coin(rng);
    }
    const auto ya = as_array(y);
    const auto got = auroc(s, std::span<const bool>(ya.get(), n));
    const bool both = std::count(y.begin(), y.end(), true) > 0 && std::count(y.begin(), y.end(), false) > 0;
    ASSERT_EQ(got.has_value(), both);
    if (both) EXPECT_NEAR(*got, pairwise_auroc(s, y), 1e-12);
  }
}

TEST(Metrics, ReliabilityBinEdges) {
  const std::vector<double> p = {0.0, 0.1, 0.95, 1.0};
  const bool o[] = {false, true, true, true};
  const auto bins = reliability_bins(p, o, 10);
  ASSERT_EQ(bins.size(), 10u);
  EXPECT_EQ(bins[0].count, 1u);
  EXPECT_EQ(bins[1].count, 1u);
  EXPECT_EQ(bins[9].count, 2u);
  EXPECT_DOUBLE_EQ(bins[9].confidence, 0.975);
  EXPECT_DOUBLE_EQ(ece(p, o, 10), (0.0 + 0.9 + 2 * 0.025) / 4.0);
}

TEST(Metrics, CoverageIsClosedAndRejectsInvertedIntervals) {
  const std::vector<double> lo = {0, 0, 0}, hi = {1, 1, 1}, t = {0, 1, 1.01};
  EXPECT_DOUBLE_EQ(interval_coverage(lo, hi, t), 2.0 / 3.0);
  EXPECT_THROW(interval_coverage(hi, lo, t), ArgumentError);
}

TEST(Metrics, RiskSensitivityBreaksTiesById) {
  const std::vector<double> s = {0.9, 0.5, 0.5, 0.1};
  const bool y[] = {true, false, true, true};
  const std::vector<std::string> ids = {"a", "c", "b", "d"};
  // q = 50 -> k = 2: "a" then "b" (tie with "c" resolved by id).
  const auto r = risk_sensitivity(s, y, ids, 50.0);
  EXPECT_EQ(r.k, 2u);
  EXPECT_EQ(r.threshold, 0.5);
  EXPECT_DOUBLE_EQ(*r.recall_at_top_q, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*r.fnr_high_risk, 1.0 / 3.0);
  EXPECT_EQ(risk_sensitivity(s, y, ids, 10.0).k, 1u);
  EXPECT_THROW(risk_sensitivity(s, y, ids, 0.0), ArgumentError);
  EXPECT_THROW(risk_sensitivity(s, y, ids, 100.0), ArgumentError);
  const bool none[] = {false, false, false, false};
  EXPECT_FALSE(risk_sensitivity(s, none, ids, 50.0).recall_at_top_q);
}

TEST(Report, ValueClassCountsEdges) {
  const std::vector<double> edges = {0.05, 0.25};
  EXPECT_EQ(value_class(0.0, edges), 0);
  EXPECT_EQ(value_class(0.05, edges), 1);
  EXPECT_EQ(value_class(0.3, edges), 2);
}

MetricInputs sample_inputs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  MetricInputs in;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = u(rng);
    in.ids.push_back("r" + std::to_string(i));
    in.true_value.push_back(v);
    in.predicted_value.push_back(v + 0.1 * (u(rng) - 0.5));
    in.true_class.push_back(v > 0.5);
    in.predicted_class.push_back(in.predicted_value.back() > 0.5);
    in.prob_high.push_back(std::clamp(in.predicted_value.back(), 0.0, 1.0));
    in.is_high.push_back(v > 0.5);
    in.ci_low.push_back(in.predicted_value.back() - 0.04);
    in.ci_high.push_back(in.predicted_value.back() + 0.04);
  }
  return in;
}

TEST(Report, ComputesConsistentMetrics) {
  auto in = sample_inputs(300, 2);
  const auto r = compute_report(in, 10.0);
  EXPECT_EQ(r.n, 300u);
  EXPECT_EQ(r.mae, mae(in.predicted_value, in.true_value));
  EXPECT_FALSE(r.reachability_rate);
  EXPECT_GT(*r.auroc, 0.9);
  EXPECT_EQ(r.reliability.size(), static_cast<std::size_t>(kDefaultBins));
  const auto j = report_to_json(r);
  EXPECT_EQ(j.at("n"), 300);
  EXPECT_EQ(reliability_csv(r).substr(0, 41), "bin,lower,upper,count,confidence,accuracy");
  in.ci_low.pop_back();
  EXPECT_THROW(in.validate(), ArgumentError);
}

TEST(Report, AccessibilityAveragesSkipUnreachable) {
  auto in = sample_inputs(4, 3);
  in.reachable = {1, 0, 1, 0};
  in.travel_time_s = {100, std::numeric_limits<double>::infinity(), 300, std::numeric_limits<double>::infinity()};
  in.redundancy = {1, 0, 3, 0};
  const auto r = compute_report(in, 50.0);
  EXPECT_DOUBLE_EQ(*r.reachability_rate, 0.5);
  EXPECT_DOUBLE_EQ(*r.mean_hazard_T, 200.0);
  EXPECT_DOUBLE_EQ(*r.mean_K, 1.0);
}

TEST(Report, SubgroupsFlagTinyStrata) {
  const auto in = sample_inputs(21, 4);
  std::vector<std::string> strata(21, "big");
  for (std::size_t i = 0; i < 10; ++i) strata[i] = "other";
  strata[20] = "solo";
  const auto s = subgroup_report(in, strata, 10.0);
  EXPECT_EQ(s.strata.size(), 3u);
  EXPECT_EQ(s.flagged, std::vector<std::string>{"solo"});
  const double gap = std::abs(s.strata.at("big").mae - s.strata.at("other").mae);
  EXPECT_DOUBLE_EQ(s.gaps.at("mae"), gap);
  EXPECT_TRUE(subgroup_to_json(s).contains("gaps"));
}

const data::SyntheticCity& city(const std::string& id = "tst") {
  static std::map<std::string, data::SyntheticCity> cache;
  auto it = cache.find(id);
  if (it == cache.end()) it = cache.emplace(id, testing::small_city(41 + id.size(), 80, id)).first;
  return it->second;
}

TEST(Splits, TemporalClipsBoundsToAvailableYears) {
  auto recs = city().dataset.records;
  const auto m = temporal_split(recs, {2030, 2040});
  EXPECT_FALSE(m.warnings.empty());
  EXPECT_TRUE(audit_manifest(m).empty());
  EXPECT_GT(m.count(data::Partition::kTest), 0u);
  EXPECT_GT(m.count(data::Partition::kTrain), 0u);
  EXPECT_NO_THROW(check_manifest_covers(m, recs));
  recs.push_back(recs.front());
  recs.back().id = "new";
  EXPECT_THROW(check_manifest_covers(m, recs), ArgumentError);
}

TEST(Splits, AuditCatchesTamperedManifests) {
  const auto& recs = city().dataset.records;
  auto m = temporal_split(recs, {2018, 2021});
  auto& some = m.records.begin()->second;
  some.partition = some.year > 2021 ? data::Partition::kTrain : data::Partition::kTest;
  EXPECT_FALSE(audit_manifest(m).empty());

  auto sb = spatial_block_split(recs, 0.5, 0.3, 2);
  EXPECT_TRUE(audit_manifest(sb).empty());
  // Move one test record's partition to train: its cell now spans both.
  for (auto& [id, info] : sb.records) {
    if (info.partition == data::Partition::kTest) {
      info.partition = data::Partition::kTrain;
      break;
    }
  }
  EXPECT_FALSE(audit_manifest(sb).empty());
}

TEST(Splits, SpatialBlocksNeedEnoughCells) {
  const auto& recs = city().dataset.records;
  EXPECT_THROW(spatial_block_split(recs, 50.0), ArgumentError);
  EXPECT_EQ(cell_id("c", 1500.0, -10.0, 1.0), "c:1:-1");
}

TEST(Splits, UnseenCityHoldsOutEverything) {
  std::vector<data::BuildingRecord> recs = city("aa").dataset.records;
  const auto& b = city("bbb").dataset.records;
  recs.insert(recs.end(), b.begin(), b.end());
  const auto m = unseen_city_split(recs, "bbb");
  EXPECT_EQ(m.count(data::Partition::kTest), b.size());
  EXPECT_TRUE(audit_manifest(m).empty());
  EXPECT_THROW(unseen_city_split(recs, "zz"), ArgumentError);
  EXPECT_THROW(unseen_city_split(b, "bbb"), ArgumentError);
}

TEST(Splits, PromptAuditBlocksMetadataOnlyLabels) {
  auto m = temporal_split(city().dataset.records);
  m.metadata_only_cities = {"tst"};
  EXPECT_NO_THROW(audit_prompt_inputs(m, {"tst", {}, false}));
  EXPECT_THROW(audit_prompt_inputs(m, {"tst", {"ev1"}, false}), LeakageError);
  EXPECT_THROW(audit_prompt_inputs(m, {"tst", {}, true}), LeakageError);
  EXPECT_NO_THROW(audit_prompt_inputs(m, {"other", {"ev1"}, true}));
}

TEST(Splits, ManifestJsonRoundTrip) {
  const auto m = spatial_block_split(city().dataset.records, 0.5, 0.25, 9);
  const auto back = manifest_from_json(manifest_to_json(m));
  EXPECT_EQ(back.regime, m.regime);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.partitions(), m.partitions());
  EXPECT_EQ(manifest_to_json(back), manifest_to_json(m));
  EXPECT_THROW(manifest_from_json(nlohmann::json::object()), FormatError);
  EXPECT_EQ(parse_regime(regime_name(SplitRegime::kUnseenCity)), SplitRegime::kUnseenCity);
  EXPECT_FALSE(parse_regime("bogus"));
}

}  // namespace
}  // namespace urbanrisk::eval
