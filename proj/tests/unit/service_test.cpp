#include <atomic>
#include <set>
#include <chrono>
#include <thread>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "urbanrisk/errors.hpp"
#include "urbanrisk/service/http_server.hpp"
#include "urbanrisk/service/layer_store.hpp"
#include "urbanrisk/service/risk_layer.hpp"
#include "urbanrisk/service/scenario_service.hpp"

namespace urbanrisk::service {
namespace {

using namespace std::chrono_literals;

std::shared_ptr<const graph::RoadNetwork> grid() {
  static const auto net = testing::grid_network(4, 4, 30.0);
  return net;
}

RiskLayer layer(double multiplier) { return testing::uniform_layer(*grid(), multiplier, "2026-01-01T00:00:00Z"); }

TEST(LayerStore, EmptyStoreIsUnavailable) {
  const LayerStore store;
  EXPECT_EQ(store.version(), 0u);
  EXPECT_FALSE(store.try_current());
  EXPECT_THROW(store.current(), ServiceUnavailable);
  const std::vector<std::string> ids = {"e0"};
  EXPECT_THROW(store.query_edge_weights(ids), ServiceUnavailable);
}

TEST(LayerStore, VersionRules) {
  LayerStore store;
  EXPECT_EQ(store.publish(layer(1.0)), 1u);
  auto explicit_v = layer(1.5);
  explicit_v.version = 2;
  EXPECT_EQ(store.publish(explicit_v), 2u);
  auto stale = layer(2.0);
  stale.version = 2;
  EXPECT_THROW(store.publish(stale), StateError);
  auto gap = layer(2.0);
  gap.version = 5;
  EXPECT_THROW(store.publish(gap), ArgumentError);
  auto tampered = layer(2.0);
  tampered.weights.entries[0].multiplier = 9.0;
  EXPECT_THROW(store.publish(tampered), ArgumentError);
  EXPECT_EQ(store.version(), 2u);
}

TEST(LayerStore, QueryReturnsPublishedValuesInRequestOrder) {
  LayerStore store;
  auto l = layer(1.25);
  l.weights.entries[1].multiplier.reset();
  l.seal();
  store.publish(l);
  const std::vector<std::string> ids = {l.weights.entries[1].edge_id, "missing", l.weights.entries[0].edge_id};
  const auto q = store.query_edge_weights(ids);
  EXPECT_EQ(q.version, 1u);
  ASSERT_EQ(q.results.size(), 3u);
  EXPECT_EQ(q.results[0].status, EdgeStatus::kRemoved);
  EXPECT_FALSE(q.results[0].multiplier);
  EXPECT_EQ(q.results[1].status, EdgeStatus::kNotFound);
  EXPECT_EQ(q.results[2].status, EdgeStatus::kFound);
  EXPECT_EQ(*q.results[2].multiplier, 1.25);
  const auto j = edge_query_json(q);
  EXPECT_EQ(j.at("version"), 1);
  EXPECT_EQ(j.at("edges")[1].at("status"), "not_found");
}

TEST(LayerStore, ReadersSeeWholeDocuments) {
  LayerStore store;
  store.publish(layer(1.0));
  std::atomic<bool> done = false;
  std::atomic<int> torn = 0;
  std::thread reader([&] {
    while (!done) {
      const auto cur = store.current();
      if (!cur->layer.consistent()) ++torn;
      const double m0 = *cur->layer.weights.entries.front().multiplier;
      for (const auto& e : cur->layer.weights.entries) {
        if (*e.multiplier != m0) ++torn;
      }
    }
  });
  for (int i = 1; i <= 50; ++i) store.publish(layer(1.0 + i * 0.01));
  done = true;
  reader.join();
  EXPECT_EQ(torn, 0);
  EXPECT_EQ(store.version(), 51u);
}

TEST(RiskLayer, ChecksumIgnoresVersionOnly) {
  auto l = layer(1.1);
  const auto c = l.checksum;
  l.version = 77;
  EXPECT_EQ(l.compute_checksum(), c);
  l.zones.push_back({"z", 1, 1.0, 10.0, 1.0});
  EXPECT_NE(l.compute_checksum(), c);
}

TEST(RiskLayer, JsonRoundTrip) {
  auto l = layer(1.3);
  l.version = 4;
  l.zones = {{"a:0:0", 3, 2.0 / 3.0, 120.0, 1.5}, {"a:0:1", 1, 0.0, std::nullopt, 0.0}};
  l.seal();
  const auto back = risk_layer_from_json(risk_layer_to_json(l));
  EXPECT_EQ(back.version, 4u);
  EXPECT_EQ(back.zones, l.zones);
  EXPECT_EQ(back.weights, l.weights);
  EXPECT_TRUE(back.consistent());
  auto bad = risk_layer_to_json(l);
  bad.erase("weight_layer");
  EXPECT_THROW(risk_layer_from_json(bad), FormatError);
}

TEST(RiskLayer, BuiltZonesVerifyAgainstEmbeddedWeights) {
  const auto city = testing::small_city(51, 60);
  const auto cn = graph::condition_network(city.network, city.scenarios.back(), {});
  std::vector<data::BuildingRecord> recs;
  for (const auto& r : city.dataset.records) {
    if (r.year == 2020) recs.push_back(r);
  }
  const ZoneSpec zs{{recs[0].lat, recs[0].lon}, 0.5};
  auto l = build_risk_layer(cn, recs, city.services, zs, 900.0, "t0");
  EXPECT_TRUE(l.consistent());
  std::size_t buildings = 0;
  for (const auto& z : l.zones) buildings += z.buildings;
  EXPECT_EQ(buildings, recs.size());
  EXPECT_TRUE(std::is_sorted(l.zones.begin(), l.zones.end(),
                             [](const auto& a, const auto& b) { return a.zone_id < b.zone_id; }));
  EXPECT_TRUE(verify_zones(l, city.network, recs, city.services, zs, 900.0).empty());
  l.zones[0].reachability_rate = l.zones[0].reachability_rate > 0.5 ? 0.0 : 1.0;
  EXPECT_EQ(verify_zones(l, city.network, recs, city.services, zs, 900.0),
            std::vector<std::string>{l.zones[0].zone_id});
}

TEST(LayerRefresher, PublishesOnCadenceAndSurvivesBuildFailures) {
  LayerStore store;
  std::atomic<int> calls = 0;
  std::vector<std::string> errors;
  std::mutex mu;
  LayerRefresher r(
      store,
      [&] {
        if (++calls == 2) throw ArgumentError("boom");
        return layer(1.0 + calls * 0.1);
      },
      5ms, [&](const std::string& e) {
        std::lock_guard lock(mu);
        errors.push_back(e);
      });
  r.start();
  const auto deadline = std::chrono::steady_clock::now() + 5s;
  while (store.version() < 3 && std::chrono::steady_clock::now() < deadline) std::this_thread::sleep_for(1ms);
  r.stop();
  EXPECT_GE(store.version(), 3u);
  std::lock_guard lock(mu);
  ASSERT_FALSE(errors.empty());
  EXPECT_NE(errors[0].find("boom"), std::string::npos);
}

TEST(ErrorResponse, MapsErrorKindsToStatus) {
  EXPECT_EQ(error_response(ValidationError(std::vector<FieldError>{{"samples", "too many"}})).status, 422);
  const auto v = error_response(ValidationError(std::vector<FieldError>{{"samples", "too many"}}));
  EXPECT_EQ(v.body.at("fields")[0].at("field"), "samples");
  EXPECT_EQ(v.body.at("error"), "validation");
  EXPECT_EQ(error_response(ServiceUnavailable("x")).status, 503);
  EXPECT_EQ(error_response(StateError("x")).status, 409);
  EXPECT_EQ(error_response(FormatError("x")).status, 400);
  EXPECT_EQ(error_response(ArgumentError("x")).status, 400);
  EXPECT_EQ(error_response(std::runtime_error("x")).status, 500);
}

TEST(ScenarioRequest, ParsesOptionsAndSinglePrompt) {
  const nlohmann::json j = {
      {"request_id", "r1"},
      {"prompt", {{"id", "p"}, {"kind", "building_retrofit"}, {"deltas", {{"structural", 5.0}}}}},
      {"year", 2022},
      {"options", {{"horizon", 3}, {"samples", 20}, {"seed", 7}, {"sensitivity", false}}}};
  const auto r = scenario_request_from_json(j);
  EXPECT_EQ(r.request_id, "r1");
  ASSERT_EQ(r.prompts.size(), 1u);
  EXPECT_EQ(r.prompts[0].deltas.structural, 5.0);
  EXPECT_EQ(*r.year, 2022);
  EXPECT_EQ(r.horizon, 3);
  EXPECT_EQ(r.samples, 20);
  EXPECT_EQ(r.seed, 7u);
  EXPECT_FALSE(r.sensitivity);
  const auto again = scenario_request_from_json(scenario_request_to_json(r));
  EXPECT_EQ(again.prompts, r.prompts);
  EXPECT_EQ(again.horizon, r.horizon);
}

TEST(ScenarioRequest, ReportsEveryBadField) {
  const nlohmann::json j = {{"prompts", nlohmann::json::array()}, {"options", {{"horizon", 0}, {"samples", 1}}}};
  try {
    scenario_request_from_json(j);
    FAIL();
  } catch (const ValidationError& e) {
    std::set<std::string> fields;
    for (const auto& f : e.fields()) fields.insert(f.field);
    EXPECT_TRUE(fields.count("request_id"));
    EXPECT_TRUE(fields.count("options.horizon"));
    EXPECT_TRUE(fields.count("options.samples"));
  }
}

}  // namespace
}  // namespace urbanrisk::service
