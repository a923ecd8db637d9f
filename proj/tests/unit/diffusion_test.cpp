#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "urbanrisk/diffusion/forecaster.hpp"
#include "urbanrisk/diffusion/loss.hpp"
#include "urbanrisk/diffusion/sampler.hpp"
#include "urbanrisk/diffusion/schedule.hpp"
#include "urbanrisk/diffusion/trainer.hpp"
#include "urbanrisk/errors.hpp"

namespace urbanrisk::diffusion {
namespace {

TEST(Schedule, RejectsBadParameters) {
  EXPECT_THROW(build_schedule(1), ArgumentError);
  EXPECT_THROW(build_schedule(100, 0.0, 0.02), ArgumentError);
  EXPECT_THROW(build_schedule(100, 0.02, 0.01), ArgumentError);
  EXPECT_THROW(build_schedule(100, 1e-4, 1.0), ArgumentError);
  const auto s = build_schedule(10, 0.01, 0.1);
  EXPECT_EQ(s.alpha_bar(0), 1.0);
  EXPECT_THROW(s.beta(0), ArgumentError);
  EXPECT_THROW(s.beta(11), ArgumentError);
  EXPECT_DOUBLE_EQ(s.beta(1), 0.01);
  EXPECT_DOUBLE_EQ(s.beta(10), 0.1);
}

TEST(Schedule, JsonRoundTrip) {
  const auto s = build_schedule(50, 2e-4, 3e-2);
  const auto back = schedule_from_json(schedule_to_json(s));
  EXPECT_EQ(back.betas(), s.betas());
  EXPECT_EQ(back.alpha_bars(), s.alpha_bars());
}

TEST(Schedule, ForwardNoiseChecksShapesAndStep) {
  const auto s = build_schedule(10);
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(3);
  EXPECT_THROW(forward_noise(x, 0, s, x), ArgumentError);
  EXPECT_THROW(forward_noise(x, 1, s, Eigen::VectorXd::Ones(2)), ArgumentError);
  const auto xt = forward_noise(x, 5, s, Eigen::VectorXd::Zero(3));
  EXPECT_NEAR(xt(0), std::sqrt(s.alpha_bar(5)), 1e-15);
}

TEST(SamplingSteps, AlwaysSpanTheFullRange) {
  for (int count : {1, 2, 3, 7, 50, 1000}) {
    const auto st = sampling_steps(1000, count);
    ASSERT_EQ(static_cast<int>(st.size()), count);
    EXPECT_EQ(st.front(), 1000);
    if (count > 1) EXPECT_EQ(st.back(), 1);
    for (std::size_t i = 1; i < st.size(); ++i) EXPECT_LT(st[i], st[i - 1]);
  }
  EXPECT_THROW(sampling_steps(10, 0), ArgumentError);
  EXPECT_THROW(sampling_steps(10, 11), ArgumentError);
}

TEST(Summaries, PercentileInterpolates) {
  EXPECT_DOUBLE_EQ(percentile({3, 1, 2, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(percentile({3, 1, 2, 4}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile({3, 1, 2, 4}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(percentile({0, 10}, 0.05), 0.5);
}

TEST(Summaries, IntervalBracketsTheMean) {
  Eigen::MatrixXd s(3, 1);
  s << 0.0, 0.0, 9.0;  // skewed: the 5th percentile equals 0, the mean is 3
  const auto set = summarize_samples(s);
  EXPECT_DOUBLE_EQ(set.mean(0), 3.0);
  EXPECT_LE(set.ci_low(0), set.mean(0));
  EXPECT_GE(set.ci_high(0), set.mean(0));
  EXPECT_THROW(summarize_samples(Eigen::MatrixXd::Zero(1, 2)), ArgumentError);
  EXPECT_THROW(summarize_samples(Eigen::MatrixXd::Zero(4, 2), 1.0), ArgumentError);
}

TEST(Sampler, UntrainedDenoiserIsRejected) {
  const ResidualDenoiser d({2, 0, 4, 8, 1}, 1);
  const auto s = build_schedule(20);
  EXPECT_THROW(ddim_sample_batch(d, s, Eigen::MatrixXd(0, 3), Eigen::MatrixXd::Zero(2, 3)), StateError);
}

TEST(Sampler, ExactEpsRecoversPointMass) {
  // With sigma -> 0 every trajectory collapses onto mu.
  const auto s = build_schedule(200);
  const testing::GaussianEpsOracle oracle(1.7, 1e-9, s);
  Rng rng(3);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd xT(1, 64);
  for (Eigen::Index i = 0; i < xT.cols(); ++i) xT(0, i) = n(rng);
  const auto out = ddim_sample_batch(oracle, s, Eigen::MatrixXd(0, 64), xT, {.steps = 40});
  for (Eigen::Index i = 0; i < out.cols(); ++i) EXPECT_NEAR(out(0, i), 1.7, 1e-6);
}

TEST(Sampler, ChunkingDoesNotChangeResults) {
  ResidualDenoiser d({2, 3, 4, 8, 1}, 5);
  d.set_trained(true);
  const auto s = build_schedule(30);
  Rng rng(4);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd cond(3, 10), xT(2, 10);
  for (Eigen::Index i = 0; i < cond.size(); ++i) cond(i) = n(rng);
  for (Eigen::Index i = 0; i < xT.size(); ++i) xT(i) = n(rng);
  const auto a = ddim_sample_batch(d, s, cond, xT, {.steps = 10, .chunk = 3});
  const auto b = ddim_sample_batch(d, s, cond, xT, {.steps = 10, .chunk = 100});
  EXPECT_TRUE(a.isApprox(b, 1e-12));
}

TEST(Denoiser, JsonRoundTripPreservesOutputs) {
  ResidualDenoiser d({4, 3, 6, 12, 2}, 9);
  d.set_trained(true);
  const auto back = ResidualDenoiser::from_json(d.to_json());
  EXPECT_EQ(back.config(), d.config());
  EXPECT_EQ(back.parameters(), d.parameters());
  EXPECT_TRUE(back.trained());
  nlohmann::json bad = d.to_json();
  bad.erase("parameters");
  EXPECT_THROW(ResidualDenoiser::from_json(bad), FormatError);
}

TEST(Denoiser, GroupRangesTileTheParameterVector) {
  const ResidualDenoiser d({4, 3, 6, 12, 3}, 1);
  Eigen::Index at = 0;
  for (int g = 0; g < d.num_groups(); ++g) {
    const auto [b, e] = d.group_range(g);
    EXPECT_EQ(b, at);
    EXPECT_GT(e, b);
    at = e;
  }
  EXPECT_EQ(at, d.parameters().size());
}

TEST(Loss, CombinedLossWeighsComponents) {
  const LossComponents c{1.0, 2.0, 3.0, 4.0, 5.0};
  EXPECT_DOUBLE_EQ(combined_loss(c), 1.0 + 1.0 + 1.5 + 1.2 + 1.0);
  EXPECT_THROW(combined_loss({-1.0, 0, 0, 0, 0}), ArgumentError);
  LossWeights w;
  w.heat = -0.1;
  EXPECT_THROW(w.validate(), ArgumentError);
  EXPECT_EQ(weights_from_json(weights_to_json(LossWeights{})), LossWeights{});
}

TEST(Loss, ExactEpsGivesZeroDiffusionLoss) {
  const auto s = build_schedule(100);
  const testing::GaussianEpsOracle oracle(0.0, 1.0, s);
  // For x0 ~ N(0, 1) the oracle's eps is the posterior mean, so the loss is
  // positive; for a point mass at mu it is exact.
  const testing::GaussianEpsOracle point(0.5, 1e-12, s);
  const Eigen::MatrixXd x0 = Eigen::MatrixXd::Constant(1, 200, 0.5);
  EXPECT_NEAR(diffusion_loss(x0, Eigen::MatrixXd(0, 200), point, s, 1), 0.0, 1e-12);
  EXPECT_GT(diffusion_loss(x0 * 4.0, Eigen::MatrixXd(0, 200), oracle, s, 1), 0.0);
  EXPECT_THROW(diffusion_loss(Eigen::MatrixXd(1, 0), Eigen::MatrixXd(0, 0), oracle, s, 1), ArgumentError);
}

TEST(Trainer, ReducesProbeLossAndIsReproducible) {
  Rng rng(7);
  std::normal_distribution<double> n(0, 1);
  TrainingSet data{Eigen::MatrixXd(4, 256), Eigen::MatrixXd(2, 256)};
  for (Eigen::Index i = 0; i < 256; ++i) {
    data.cond(0, i) = n(rng);
    data.cond(1, i) = n(rng);
    for (int k = 0; k < 4; ++k) data.x0(k, i) = 0.8 * data.cond(k % 2, i) + 0.1 * n(rng);
  }
  const auto s = build_schedule(100);
  TrainConfig tc;
  tc.stages = {{1, 15, 3e-3, 0}};
  tc.batch_size = 64;
  tc.probe_size = 128;
  tc.seed = 11;
  ResidualDenoiser a({4, 2, 8, 32, 2}, 3), b({4, 2, 8, 32, 2}, 3);
  const auto ha = train_denoiser(a, s, data, tc);
  const auto hb = train_denoiser(b, s, data, tc);
  EXPECT_TRUE(a.trained());
  EXPECT_LT(ha.epochs.back().probe, 0.7 * ha.initial_probe);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_EQ(ha.to_csv(), hb.to_csv());
}

TEST(Trainer, FrozenGroupsStayFixed) {
  TrainingSet data{Eigen::MatrixXd::Random(4, 64), Eigen::MatrixXd::Random(2, 64)};
  const auto s = build_schedule(50);
  TrainConfig tc;
  tc.stages = {{2, 2, 1e-3, 2}};
  tc.batch_size = 32;
  tc.probe_size = 32;
  ResidualDenoiser d({4, 2, 8, 16, 2}, 3);
  const Eigen::VectorXd before = d.parameters();
  train_denoiser(d, s, data, tc);
  const auto [b0, e1] = std::pair{d.group_range(0).first, d.group_range(1).second};
  EXPECT_EQ(d.parameters().segment(b0, e1 - b0), before.segment(b0, e1 - b0));
  const auto [b2, e2] = d.group_range(2);
  EXPECT_NE(d.parameters().segment(b2, e2 - b2), before.segment(b2, e2 - b2));
  tc.stages = {{1, 1, 1e-3, 99}};
  EXPECT_THROW(train_denoiser(d, s, data, tc), ArgumentError);
}

TEST(Trainer, NonFiniteLossAborts) {
  TrainingSet data{Eigen::MatrixXd::Constant(4, 32, 1e300), Eigen::MatrixXd::Zero(2, 32)};
  const auto s = build_schedule(50);
  TrainConfig tc;
  tc.stages = {{1, 1, 1e-3, 0}};
  tc.batch_size = 16;
  tc.probe_size = 16;
  ResidualDenoiser d({4, 2, 8, 16, 1}, 3);
  EXPECT_THROW(train_denoiser(d, s, data, tc), TrainingDiverged);
}

class ForecasterTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    cities_ = new std::vector<data::SyntheticCity>{testing::small_city(31, 60)};
    ForecasterConfig fc;
    fc.hidden = 16;
    fc.blocks = 1;
    fc.schedule_steps = 100;
    fc.sampler_steps = 10;
    forecaster_ = new Forecaster(fc, 2);
    data::PartitionMap parts;
    for (const auto& r : cities_->front().dataset.records) {
      parts[r.id] = r.year <= 2020 ? data::Partition::kTrain : data::Partition::kTest;
    }
    TrainConfig tc;
    tc.stages = {{1, 2, 1e-3, 0}};
    tc.batch_size = 64;
    tc.probe_size = 64;
    forecaster_->fit(*cities_, parts, tc, {});
  }
  static void TearDownTestSuite() {
    delete forecaster_;
    delete cities_;
  }
  static std::vector<data::SyntheticCity>* cities_;
  static Forecaster* forecaster_;
};
std::vector<data::SyntheticCity>* ForecasterTest::cities_ = nullptr;
Forecaster* ForecasterTest::forecaster_ = nullptr;

TEST_F(ForecasterTest, ConditioningHasDeclaredWidth) {
  const auto snap = make_snapshot(cities_->front(), 2020, {});
  const auto c = forecaster_->conditioning(snap, 1);
  EXPECT_EQ(c.rows(), forecaster_->config().cond_dim());
  EXPECT_EQ(c.cols(), static_cast<Eigen::Index>(snap.records.size()));
  EXPECT_TRUE(c.allFinite());
  EXPECT_THROW(forecaster_->conditioning(snap, 0), ArgumentError);
  EXPECT_THROW(forecaster_->conditioning(snap, 11), ArgumentError);
}

TEST_F(ForecasterTest, SamplesStayInTargetDomains) {
  const auto snap = make_snapshot(cities_->front(), 2020, {});
  const std::vector<std::size_t> which = {0, 1, 2};
  const auto sets = forecaster_->sample(snap, 1, which, 6, 3);
  ASSERT_EQ(sets.size(), 3u);
  for (const auto& s : sets) {
    EXPECT_EQ(s.size(), 6);
    EXPECT_GE(s.samples.minCoeff(), 0.0);
    EXPECT_LE(s.samples.col(3).maxCoeff(), 1.0);
    EXPECT_LE(s.samples.col(2).maxCoeff(), 100.0);
  }
  // Same seed, same samples.
  EXPECT_EQ(forecaster_->sample(snap, 1, which, 6, 3)[0].samples, sets[0].samples);
}

TEST_F(ForecasterTest, CheckpointRoundTripReproducesSamples) {
  const auto path = std::filesystem::temp_directory_path() / "urbanrisk_forecaster_test.json";
  forecaster_->save(path);
  const auto back = Forecaster::load(path);
  std::filesystem::remove(path);
  const auto snap = make_snapshot(cities_->front(), 2021, {});
  const std::vector<std::size_t> which = {4, 5};
  const auto a = forecaster_->sample(snap, 2, which, 4, 8);
  const auto b = back.sample(snap, 2, which, 4, 8);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].samples, b[i].samples);
  EXPECT_THROW(Forecaster::load(path), FormatError);
}

TEST(Forecaster, UnfittedModelRefusesToSample) {
  const auto city = testing::small_city(32, 20);
  ForecasterConfig fc;
  fc.hidden = 8;
  const Forecaster f(fc, 1);
  EXPECT_THROW(f.normalization(), StateError);
  const auto snap = make_snapshot(city, 2020, {});
  const std::vector<std::size_t> which = {0};
  EXPECT_THROW(f.sample(snap, 1, which, 4, 1), StateError);
}

TEST(Forecaster, PairsLinkSameBuildingForward) {
  const auto city = testing::small_city(33, 20);
  const auto pairs = forecast_pairs(city.dataset);
  ASSERT_FALSE(pairs.empty());
  for (const auto& p : pairs) {
    const auto& a = city.dataset.records[p.source];
    const auto& b = city.dataset.records[p.target];
    EXPECT_EQ(a.building_id, b.building_id);
    EXPECT_EQ(b.year - a.year, p.horizon);
    EXPECT_GE(p.horizon, 1);
    EXPECT_LE(p.horizon, 10);
  }
}

}  // namespace
}  // namespace urbanrisk::diffusion
