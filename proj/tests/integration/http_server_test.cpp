#include <gtest/gtest.h>

#include "generators.hpp"
#include "urbanrisk/config.hpp"
#include "urbanrisk/errors.hpp"
#include "urbanrisk/pipeline.hpp"
#include "urbanrisk/service/http_server.hpp"
#include "urbanrisk/service/layer_store.hpp"
#include "urbanrisk/service/scenario_service.hpp"

// Last: <resolv.h> pulled in by httplib defines macros that clash with Eigen.
#include <httplib.h>

namespace urbanrisk::service {
namespace {

using nlohmann::json;

struct Fixture {
  PipelineConfig cfg;
  std::shared_ptr<const data::SyntheticCity> city;
  std::shared_ptr<const diffusion::Forecaster> forecaster;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    out.cfg = load_config(URBANRISK_CONFIG_DIR "/quick.toml");
    auto cities = pipeline::generate(out.cfg, 5);
    const auto manifest = pipeline::make_split(out.cfg, cities, 5);
    auto trained = pipeline::train(out.cfg, cities, manifest, 5);
    out.city = std::make_shared<const data::SyntheticCity>(std::move(cities.front()));
    out.forecaster = std::make_shared<const diffusion::Forecaster>(std::move(trained.forecaster));
    return out;
  }();
  return f;
}

class HttpServerTest : public ::testing::Test {
 protected:
  void start(bool with_scenarios) {
    const auto& f = fixture();
    if (with_scenarios) {
      ScenarioServiceConfig sc;
      sc.policy = f.cfg.policy;
      sc.max_risk_buildings = 8;
      scenarios_ = std::make_unique<ScenarioService>(f.city, f.forecaster, &store_, sc);
    }
    server_ = std::make_unique<HttpServer>(store_, scenarios_.get());
    port_ = server_->bind("127.0.0.1", 0);
    server_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void publish() {
    const auto& f = fixture();
    store_.publish(pipeline::build_layer(f.cfg, *f.city, pipeline::latest_year(*f.city), "2026-01-01T00:00:00Z"));
  }
  void TearDown() override {
    if (server_) server_->stop();
  }

  LayerStore store_;
  std::unique_ptr<ScenarioService> scenarios_;
  std::unique_ptr<HttpServer> server_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

TEST_F(HttpServerTest, HealthReportsLayerVersion) {
  start(false);
  auto r = client_->Get("/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body).at("layer_version"), 0);
  publish();
  EXPECT_EQ(json::parse(client_->Get("/health")->body).at("layer_version"), 1);
}

TEST_F(HttpServerTest, LayerEndpointsBeforeAndAfterPublish) {
  start(false);
  auto r = client_->Get("/layers/current");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 503);
  EXPECT_EQ(json::parse(r->body).at("error"), "unavailable");

  publish();
  r = client_->Get("/layers/current");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->body, store_.current()->body);
  const auto layer = risk_layer_from_json(json::parse(r->body));
  EXPECT_TRUE(layer.consistent());
  ASSERT_GE(layer.weights.entries.size(), 2u);
  const auto& e0 = layer.weights.entries[0].edge_id;
  const auto& e1 = layer.weights.entries[1].edge_id;

  r = client_->Get(("/layers/current/edges?ids=" + e1 + ",nope," + e0).c_str());
  ASSERT_EQ(r->status, 200);
  const auto edges = json::parse(r->body).at("edges");
  ASSERT_EQ(edges.size(), 3u);
  EXPECT_EQ(edges[0].at("edge_id"), e1);
  EXPECT_EQ(edges[1].at("status"), "not_found");
  if (layer.weights.entries[0].multiplier) {
    EXPECT_EQ(edges[2].at("multiplier").get<double>(), *layer.weights.entries[0].multiplier);
  }

  const json body = {{"ids", {e0, e1}}};
  r = client_->Post("/layers/current/edges", body.dump(), "application/json");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body).at("edges").size(), 2u);

  r = client_->Get("/layers/current/edges");
  EXPECT_EQ(r->status, 400);
  r = client_->Post("/layers/current/edges", R"({"ids": [1, 2]})", "application/json");
  EXPECT_EQ(r->status, 422);
  r = client_->Post("/layers/current/edges", "not json", "application/json");
  EXPECT_EQ(r->status, 400);
}

TEST_F(HttpServerTest, ScenariosDisabledAnswersConflict) {
  start(false);
  auto r = client_->Post("/scenarios", R"({"request_id": "x"})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 409);
}

TEST_F(HttpServerTest, ScenarioValidationErrorsListFields) {
  start(true);
  const json req = {{"request_id", "bad"},
                    {"prompt", {{"id", "p"}, {"kind", "green_infrastructure"}, {"deltas", {{"imperviousness", 0.9}}}}},
                    {"options", {{"samples", 1}}}};
  auto r = client_->Post("/scenarios", req.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 422);
  const auto body = json::parse(r->body);
  std::set<std::string> fields;
  for (const auto& f : body.at("fields")) fields.insert(f.at("field").get<std::string>());
  EXPECT_TRUE(fields.count("prompts[0].deltas.imperviousness"));
  EXPECT_TRUE(fields.count("options.samples"));
}

TEST_F(HttpServerTest, ScenarioRunReturnsResultAndEditedLayer) {
  start(true);
  publish();
  const json req = {
      {"request_id", "r1"},
      {"prompt",
       {{"id", "evac"}, {"kind", "transportation_upgrade"}, {"deltas", {{"capacity", 0.5}}}}},
      {"options", {{"samples", 4}, {"seed", 3}, {"sensitivity", false}}}};
  auto r = client_->Post("/scenarios", req.dump(), "application/json");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  const auto body = json::parse(r->body);
  EXPECT_EQ(body.at("request_id"), "r1");
  EXPECT_EQ(body.at("layer_version"), 1);
  const auto& variants = body.at("result").at("variants");
  ASSERT_EQ(variants.size(), 1u);
  EXPECT_GE(variants[0].at("accessibility").at("delta").at("reachability_rate").get<double>(), 0.0);
  EXPECT_EQ(body.at("edited_layer").at("type"), "FeatureCollection");
  for (const auto& d : body.at("layer_deltas")) {
    if (d.at("multiplier_before").is_number() && d.at("multiplier_after").is_number()) {
      EXPECT_LE(d.at("multiplier_after").get<double>(), d.at("multiplier_before").get<double>());
    }
  }
  // Same request, same response.
  auto again = client_->Post("/scenarios", req.dump(), "application/json");
  auto a = json::parse(again->body), b = body;
  a.erase("edited_layer");
  b.erase("edited_layer");
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace urbanrisk::service
