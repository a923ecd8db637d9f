#include <cmath>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "urbanrisk/errors.hpp"
#include "urbanrisk/graph/accessibility.hpp"
#include "urbanrisk/graph/maxflow.hpp"
#include "urbanrisk/graph/routing.hpp"
#include "urbanrisk/graph/weight_layer.hpp"

namespace urbanrisk::graph {
namespace {

using testing::ArcSpec;
using testing::network_from_arcs;

TEST(RoadNetwork, RejectsMalformedEdges) {
  std::vector<Node> nodes = {{"a", 55.0, 12.0}, {"b", 55.001, 12.0}};
  const std::vector<EdgeSpec> loop = {{"e", "a", "a", 10.0}};
  EXPECT_THROW(RoadNetwork::build(nodes, loop), ArgumentError);
  const std::vector<EdgeSpec> zero = {{"e", "a", "b", 0.0}};
  EXPECT_THROW(RoadNetwork::build(nodes, zero), ArgumentError);
  const std::vector<EdgeSpec> dangling = {{"e", "a", "zz", 5.0}};
  EXPECT_THROW(RoadNetwork::build(nodes, dangling), ArgumentError);
  const std::vector<EdgeSpec> dup = {{"e", "a", "b", 5.0}, {"e", "b", "a", 5.0}};
  EXPECT_THROW(RoadNetwork::build(nodes, dup), ArgumentError);
}

TEST(RoadNetwork, AdjacencyAndDegree) {
  const auto net = network_from_arcs(3, {{0, 1, 5}, {1, 0, 5}, {1, 2, 7}});
  EXPECT_EQ(net->out_edges(1).size(), 2u);
  EXPECT_EQ(net->in_edges(1).size(), 1u);
  EXPECT_EQ(net->degree(1), 2);  // distinct neighbours
  EXPECT_EQ(net->node_index("n2"), 2);
  EXPECT_FALSE(net->find_edge("nope"));
  EXPECT_THROW(net->edge_index("nope"), ArgumentError);
}

TEST(HazardPolicy, PiecewiseInflation) {
  const HazardPolicy p;
  EXPECT_EQ(inflation_multiplier(0.0, p), 1.0);
  EXPECT_EQ(inflation_multiplier(0.0999, p), 1.0);
  EXPECT_DOUBLE_EQ(inflation_multiplier(0.3, p), 1.0 + 4.0 * 0.2);
  EXPECT_TRUE(std::isinf(inflation_multiplier(0.5, p)));
  EXPECT_TRUE(std::isinf(inflation_multiplier(2.0, p)));
}

TEST(HazardPolicy, MultiplierIsMonotoneInDepth) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const HazardPolicy p;
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = a + u(rng) * 0.3;
    EXPECT_LE(inflation_multiplier(a, p), inflation_multiplier(b, p));
  }
}

TEST(ConditionNetwork, RemovesImpassableAndIgnoresUnlistedEdges) {
  const auto net = network_from_arcs(3, {{0, 1, 10}, {1, 2, 10}, {0, 2, 30}});
  HazardScenario h{"h", {{"e0", 0.6}, {"e1", 0.2}}, std::nullopt};
  const auto cn = condition_network(net, h, {});
  EXPECT_FALSE(cn.retained(0));
  EXPECT_TRUE(std::isinf(cn.weight(0)));
  EXPECT_DOUBLE_EQ(cn.state(1).multiplier, 1.4);
  EXPECT_EQ(cn.state(2).multiplier, 1.0);
  EXPECT_EQ(cn.scenario_id(), "h");
  HazardScenario unknown{"u", {{"zz", 0.2}}, std::nullopt};
  EXPECT_THROW(condition_network(net, unknown, {}), ArgumentError);
}

TEST(Routing, MatchesBellmanFordOnRandomGraphs) {
  Rng rng(2);
  for (int g = 0; g < 30; ++g) {
    const auto net = testing::random_network(rng, 25, 80);
    const auto cn = condition_network(net, testing::random_hazard(rng, *net, "h"), {});
    const auto dests = testing::distinct_nodes(rng, 25, 2);
    const auto fwd = shortest_costs_from(cn, 0);
    const auto bf = testing::bellman_ford(25, testing::retained_arcs(cn), 0);
    for (std::size_t v = 0; v < fwd.size(); ++v) {
      if (std::isinf(bf[v])) {
        EXPECT_TRUE(std::isinf(fwd[v]));
      } else {
        EXPECT_NEAR(fwd[v], bf[v], 1e-9 * bf[v]);
      }
    }
    const auto back = costs_to_nearest(cn, dests);
    for (int o = 0; o < 25; ++o) {
      const double want = testing::bf_travel_time(cn, o, dests);
      const auto tt = hazard_travel_time(cn, o, dests);
      if (std::isinf(want)) {
        EXPECT_FALSE(tt.reachable());
        EXPECT_TRUE(tt.path.empty());
      } else {
        EXPECT_NEAR(tt.seconds, want, 1e-9 * want);
        EXPECT_NEAR(back[static_cast<std::size_t>(o)], want, 1e-9 * want);
        ASSERT_FALSE(tt.path.empty());
        EXPECT_EQ(tt.path.front(), o);
        EXPECT_EQ(tt.path.back(), *tt.destination);
      }
    }
  }
}

TEST(Routing, TiesResolveToSmallestIds) {
  // Two equal-cost routes 0->1->3 and 0->2->3; equal-cost destinations 3 and 4.
  const auto net = network_from_arcs(5, {{0, 2, 5}, {2, 3, 5}, {0, 1, 5}, {1, 3, 5}, {0, 4, 10}});
  const std::array<NodeIndex, 2> dests{4, 3};
  const auto tt = hazard_travel_time(ConditionedNetwork::free_flow(net), 0, dests);
  EXPECT_EQ(tt.seconds, 10.0);
  EXPECT_EQ(*tt.destination, 3);
  EXPECT_EQ(tt.path, (std::vector<NodeIndex>{0, 1, 3}));
}

TEST(Routing, OriginOnFacilityCostsZero) {
  const auto net = network_from_arcs(2, {{0, 1, 5}});
  const std::array<NodeIndex, 1> dests{0};
  EXPECT_EQ(hazard_travel_time(ConditionedNetwork::free_flow(net), 0, dests).seconds, 0.0);
}

TEST(Reachability, BudgetIsInclusive) {
  const auto net = network_from_arcs(2, {{0, 1, 900}});
  const std::array<NodeIndex, 1> dests{1};
  const auto cn = ConditionedNetwork::free_flow(net);
  EXPECT_TRUE(reachability(cn, 0, dests, 900.0));
  EXPECT_FALSE(reachability(cn, 0, dests, 899.0));
}

TEST(Reachability, EnsembleProbabilityWeighsScenarios) {
  const auto net = network_from_arcs(2, {{0, 1, 100}});
  const std::array<NodeIndex, 1> dests{1};
  std::vector<ConditionedNetwork> ens = {ConditionedNetwork::free_flow(net),
                                         condition_network(net, {"wet", {{"e0", 0.9}}, 0.25}, {})};
  EXPECT_DOUBLE_EQ(reachability_probability(ens, {}, 0, dests), 0.5);
  const std::vector<double> w = {3.0, 1.0};
  EXPECT_DOUBLE_EQ(reachability_probability(ens, w, 0, dests), 0.75);
  const std::vector<HazardScenario> scen = {{"a", {}, 0.2}, {"b", {}, 0.6}};
  const auto ew = ensemble_weights(scen);
  EXPECT_DOUBLE_EQ(ew[0], 0.25);
  EXPECT_DOUBLE_EQ(ew[1], 0.75);
}

TEST(MaxFlow, CountsParallelArcs) {
  const std::vector<Arc> arcs = {{0, 1}, {0, 1}, {1, 2}, {1, 2}, {1, 2}};
  EXPECT_EQ(max_edge_disjoint_paths(3, arcs, 0, 2), 2);
}

TEST(MaxFlow, MatchesEdmondsKarpOnRandomMultigraphs) {
  Rng rng(3);
  for (int g = 0; g < 60; ++g) {
    const auto net = testing::random_network(rng, 15, 60);
    const auto cn = ConditionedNetwork::free_flow(net);
    const auto plain = testing::retained_plain_arcs(cn);
    for (int p = 0; p < 5; ++p) {
      const auto st = testing::distinct_nodes(rng, 15, 2);
      EXPECT_EQ(evacuation_redundancy(cn, st[0], st[1]), testing::edmonds_karp(15, plain, st[0], st[1]));
    }
  }
}

TEST(MaxFlow, RejectsDegenerateEndpoints) {
  const auto net = network_from_arcs(2, {{0, 1, 5}});
  const auto cn = ConditionedNetwork::free_flow(net);
  EXPECT_THROW(evacuation_redundancy(cn, 0, 0), ArgumentError);
  EXPECT_THROW(evacuation_redundancy(cn, 0, 7), ArgumentError);
}

TEST(Redundancy, BuildingOnShelterUsesAnotherShelter) {
  const auto net = network_from_arcs(3, {{0, 1, 5}, {0, 1, 6}, {1, 2, 5}});
  const auto cn = ConditionedNetwork::free_flow(net);
  const std::array<NodeIndex, 2> shelters{0, 1};
  EXPECT_EQ(redundancy_to_nearest_shelter(cn, 0, shelters), 2);
  const std::array<NodeIndex, 1> only_self{0};
  EXPECT_EQ(redundancy_to_nearest_shelter(cn, 0, only_self), 0);
}

TEST(Accessibility, SummaryAveragesFiniteTravelTimes) {
  const auto net = network_from_arcs(4, {{0, 1, 100}, {2, 1, 300}, {1, 3, 50}});
  const auto cn = ConditionedNetwork::free_flow(net);
  const std::array<NodeIndex, 3> buildings{0, 2, 3};
  const std::array<NodeIndex, 1> facilities{1};
  const std::array<NodeIndex, 1> shelters{3};
  const auto r = accessibility_summary(cn, buildings, facilities, shelters, 200.0);
  EXPECT_EQ(r.summary.buildings, 3u);
  EXPECT_DOUBLE_EQ(r.summary.reachability_rate, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(*r.summary.mean_travel_time_s, 200.0);
  EXPECT_EQ(r.per_building[2].redundancy, 0);  // sits on the only shelter
  EXPECT_THROW(summarize_access({}), ArgumentError);
  EXPECT_THROW(building_access(cn, buildings, {}, shelters), ArgumentError);
}

TEST(WeightLayer, GeoJsonRoundTripRebuildsNetwork) {
  Rng rng(4);
  const auto net = testing::random_network(rng, 12, 40);
  const auto cn = condition_network(net, testing::random_hazard(rng, *net, "h"), {});
  const auto layer = make_weight_layer(cn, "2026-01-01T00:00:00Z");
  const auto back = weight_layer_from_geojson(to_geojson(layer));
  EXPECT_EQ(back, layer);
  const auto rebuilt = apply_weight_layer(net, back);
  for (std::size_t e = 0; e < net->num_edges(); ++e) {
    EXPECT_EQ(rebuilt.retained(static_cast<EdgeIndex>(e)), cn.retained(static_cast<EdgeIndex>(e)));
    if (cn.retained(static_cast<EdgeIndex>(e))) EXPECT_EQ(rebuilt.state(static_cast<EdgeIndex>(e)).multiplier, cn.state(static_cast<EdgeIndex>(e)).multiplier);
  }
  auto doc = to_geojson(layer);
  doc["features"].erase(0);
  EXPECT_THROW(apply_weight_layer(net, weight_layer_from_geojson(doc)), ArgumentError);
  EXPECT_THROW(weight_layer_from_geojson(nlohmann::json::array()), FormatError);
}

}  // namespace
}  // namespace urbanrisk::graph
