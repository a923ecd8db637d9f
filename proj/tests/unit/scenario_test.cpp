#include <cmath>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "urbanrisk/errors.hpp"
#include "urbanrisk/scenario/counterfactual.hpp"
#include "urbanrisk/scenario/edits.hpp"
#include "urbanrisk/scenario/prompt.hpp"

namespace urbanrisk::scenario {
namespace {

using data::FeatureGroup;
namespace f = data::feature;

std::vector<data::BuildingRecord> year_records(const data::SyntheticCity& c, int year) {
  std::vector<data::BuildingRecord> out;
  for (const auto& r : c.dataset.records) {
    if (r.year == year) out.push_back(r);
  }
  return out;
}

const data::SyntheticCity& city() {
  static const auto c = testing::small_city(21, 60);
  return c;
}

TEST(Prompt, ValidationListsEveryOffendingField) {
  InterventionPrompt p;
  p.kind = InterventionKind::kGreenInfrastructure;
  p.deltas.imperviousness = 0.5;
  p.deltas.drainage = -0.1;
  try {
    p.validate();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    std::vector<std::string> fields;
    for (const auto& fe : e.fields()) fields.push_back(fe.field);
    EXPECT_NE(std::find(fields.begin(), fields.end(), "deltas.imperviousness"), fields.end());
    EXPECT_NE(std::find(fields.begin(), fields.end(), "deltas.drainage"), fields.end());
  }
}

TEST(Prompt, DeltasMustMatchKind) {
  InterventionPrompt p;
  p.id = "x";
  p.kind = InterventionKind::kBuildingRetrofit;
  p.deltas.capacity = 0.2;
  EXPECT_THROW(p.validate(), ValidationError);
}

TEST(Prompt, JsonRoundTripForRandomPrompts) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    auto p = testing::random_prompt(rng, static_cast<InterventionKind>(i % 3));
    if (i % 4 == 0) p.selector.bbox = BoundingBox{55.6, 12.5, 55.7, 12.6};
    if (i % 5 == 0) p.selector.building_ids = std::vector<std::string>{"b1", "b2"};
    if (i % 3 == 2 && i % 2 == 0) p.selector.edge_ids = std::vector<std::string>{"e1"};
    p.label = "L" + std::to_string(i);
    EXPECT_EQ(prompt_from_json(prompt_to_json(p)), p);
  }
}

TEST(Prompt, FromJsonRejectsUnknownKindWithFieldName) {
  const nlohmann::json j = {{"id", "p"}, {"kind", "teleport"}};
  try {
    prompt_from_json(j);
    FAIL();
  } catch (const ValidationError& e) {
    ASSERT_FALSE(e.fields().empty());
    EXPECT_EQ(e.fields()[0].field, "kind");
  }
}

TEST(Prompt, ScalingClampsIntoRange) {
  InterventionPrompt p;
  p.id = "g";
  p.deltas.imperviousness = 0.18;
  p.deltas.drainage = 0.1;
  const auto up = scaled_prompt(p, 1.5);
  EXPECT_EQ(up.deltas.imperviousness, kMaxImperviousnessDelta);
  EXPECT_DOUBLE_EQ(up.deltas.drainage, 0.15);
  EXPECT_NE(up.id, p.id);
  EXPECT_NO_THROW(up.validate());
  EXPECT_TRUE(scaled_prompt(p, 0.0).is_identity());
}

TEST(Selector, CriteriaCombineConjunctively) {
  const auto recs = year_records(city(), 2015);
  TargetSelector s;
  EXPECT_TRUE(s.matches(recs[0]));
  s.building_ids = std::vector<std::string>{recs[0].building_id};
  EXPECT_TRUE(s.matches(recs[0]));
  EXPECT_FALSE(s.matches(recs[1]));
  s.bbox = BoundingBox{recs[0].lat + 1.0, recs[0].lon, recs[0].lat + 2.0, recs[0].lon + 1.0};
  EXPECT_FALSE(s.matches(recs[0]));
}

TEST(BuildingEdits, GreenInfrastructureFloorsImperviousness) {
  auto recs = year_records(city(), 2015);
  recs[0].set(FeatureGroup::kInfra, f::kImperviousness, 0.05);
  InterventionPrompt p;
  p.id = "g";
  p.deltas.imperviousness = 0.2;
  p.deltas.drainage = 0.3;
  const auto out = apply_building_edits(p, recs, 0.5);
  EXPECT_EQ(out.records[0].get(FeatureGroup::kInfra, f::kImperviousness), 0.0);
  const double d0 = recs[1].get(FeatureGroup::kInfra, f::kDrainageCapacity);
  EXPECT_DOUBLE_EQ(out.records[1].get(FeatureGroup::kInfra, f::kDrainageCapacity), d0 * (1.0 + 0.5 * 0.3));
  EXPECT_EQ(out.report.buildings.size(), recs.size());
  EXPECT_DOUBLE_EQ(out.report.buildings[0].m_flood, 1.0 - 0.6 * 0.3);
}

TEST(BuildingEdits, RetrofitCapsScoreAndLeavesUnselectedUntouched) {
  auto recs = year_records(city(), 2015);
  recs[0].set(FeatureGroup::kStruct, f::kStructuralScore, 95.0);
  InterventionPrompt p;
  p.id = "r";
  p.kind = InterventionKind::kBuildingRetrofit;
  p.deltas.structural = 10.0;
  p.selector.building_ids = std::vector<std::string>{recs[0].building_id};
  const auto out = apply_building_edits(p, recs);
  EXPECT_EQ(out.records[0].get(FeatureGroup::kStruct, f::kStructuralScore), 100.0);
  for (std::size_t i = 1; i < recs.size(); ++i) EXPECT_EQ(out.records[i], recs[i]);
}

TEST(BuildingEdits, MaskedGroupsProduceWarnings) {
  auto recs = year_records(city(), 2015);
  recs[0].missing[static_cast<int>(FeatureGroup::kInfra)] = true;
  recs[0].group(FeatureGroup::kInfra).clear();
  InterventionPrompt p;
  p.id = "g";
  p.deltas.imperviousness = 0.1;
  const auto out = apply_building_edits(p, recs);
  EXPECT_FALSE(out.report.warnings.empty());
  EXPECT_TRUE(out.records[0].is_missing(FeatureGroup::kInfra));
}

TEST(NetworkEdits, SkipsNonEvacuationAndRejectsUnknownEdges) {
  const auto net = testing::network_from_arcs(3, {{0, 1, 10, true}, {1, 2, 10, false}});
  const auto cn = graph::condition_network(net, {"h", {{"e0", 0.3}, {"e1", 0.3}}, std::nullopt}, {});
  InterventionPrompt p;
  p.id = "t";
  p.kind = InterventionKind::kTransportationUpgrade;
  p.deltas.capacity = 0.4;
  p.selector.edge_ids = std::vector<std::string>{"e0", "e1"};
  const auto out = apply_network_edits(p, cn);
  EXPECT_DOUBLE_EQ(out.network.state(0).multiplier, 1.0 + (cn.state(0).multiplier - 1.0) * 0.8);
  EXPECT_EQ(out.network.state(1).multiplier, cn.state(1).multiplier);
  EXPECT_FALSE(out.report.warnings.empty());
  p.selector.edge_ids = std::vector<std::string>{"zz"};
  EXPECT_THROW(apply_network_edits(p, cn), ArgumentError);
  InterventionPrompt g;
  g.id = "g";
  EXPECT_THROW(apply_network_edits(g, cn), ArgumentError);
}

TEST(NetworkEdits, RemovedEdgesStayRemoved) {
  const auto net = testing::network_from_arcs(2, {{0, 1, 10, true}});
  const auto cn = graph::condition_network(net, {"h", {{"e0", 0.9}}, std::nullopt}, {});
  InterventionPrompt p;
  p.id = "t";
  p.kind = InterventionKind::kTransportationUpgrade;
  p.deltas.capacity = 0.5;
  EXPECT_FALSE(apply_network_edits(p, cn).network.retained(0));
}

TEST(Compose, AppliesPromptsInDeclaredOrder) {
  const auto recs = year_records(city(), 2015);
  const auto cn = graph::ConditionedNetwork::free_flow(city().network);
  InterventionPrompt a;
  a.id = "a";
  a.deltas.drainage = 0.1;
  InterventionPrompt b = a;
  b.id = "b";
  b.deltas.drainage = 0.2;
  const std::vector<InterventionPrompt> ab = {a, b};
  const auto out = compose_edits(ab, recs, cn);
  ASSERT_EQ(out.reports.size(), 2u);
  EXPECT_EQ(out.reports[0].prompt_id, "a");
  const double want = recs[0].targets.flood_depth * (1.0 - 0.6 * 0.1) * (1.0 - 0.6 * 0.2);
  EXPECT_DOUBLE_EQ(out.records[0].targets.flood_depth, want);
}

TEST(Counterfactual, AccessibilityDeltaNeverWorsensUnderCapacityUpgrades) {
  Rng rng(5);
  const auto& c = city();
  for (int trial = 0; trial < 10; ++trial) {
    diffusion::Snapshot s;
    s.city = &c;
    s.year = 2020;
    s.records = year_records(c, 2020);
    s.network = std::make_shared<const graph::ConditionedNetwork>(
        graph::condition_network(c.network, testing::random_hazard(rng, *c.network, "h", 0.4, 0.45), {}));
    const std::array<InterventionPrompt, 1> up{testing::random_prompt(rng, InterventionKind::kTransportationUpgrade)};
    const auto d = accessibility_delta(up, s, {}, 900.0);
    ASSERT_TRUE(d.mean_travel_time_s);
    EXPECT_LE(*d.mean_travel_time_s, 0.0);
    EXPECT_GE(d.reachability_rate, 0.0);
  }
}

TEST(Counterfactual, RejectsEnsembleOnAnotherNetwork) {
  const auto& c = city();
  diffusion::Snapshot s;
  s.city = &c;
  s.records = year_records(c, 2020);
  s.network = std::make_shared<const graph::ConditionedNetwork>(graph::ConditionedNetwork::free_flow(c.network));
  HazardEnsemble ens;
  ens.members.push_back(graph::ConditionedNetwork::free_flow(testing::small_city(22, 20).network));
  InterventionPrompt p;
  p.id = "t";
  p.kind = InterventionKind::kTransportationUpgrade;
  const std::array<InterventionPrompt, 1> ps{p};
  EXPECT_THROW(accessibility_delta(ps, s, ens, 900.0), ArgumentError);
}

TEST(Counterfactual, UntrainedForecasterIsAStateError) {
  const auto& c = city();
  const auto snap = diffusion::make_snapshot(c, 2020, {});
  diffusion::ForecasterConfig fc;
  fc.hidden = 8;
  const diffusion::Forecaster f(fc, 1);
  InterventionPrompt p;
  p.id = "g";
  const std::array<InterventionPrompt, 1> ps{p};
  EXPECT_THROW(run_counterfactual(ps, snap, {}, f), StateError);
}

}  // namespace
}  // namespace urbanrisk::scenario
