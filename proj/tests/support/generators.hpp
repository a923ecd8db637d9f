#pragma once

// Hand-rolled generators for property tests. Every generator is a pure
// function of its Rng state.

#include <memory>
#include <string>
#include <vector>

#include "urbanrisk/data/synth.hpp"
#include "urbanrisk/graph/network.hpp"
#include "urbanrisk/random.hpp"
#include "urbanrisk/scenario/prompt.hpp"
#include "urbanrisk/service/risk_layer.hpp"

namespace urbanrisk::testing {

struct ArcSpec {
  int from = 0;
  int to = 0;
  double travel_time_s = 1.0;
  bool is_evacuation = false;
};

// Nodes "n0".."n<k>" on a small lat/lon lattice, edges "e0".."e<m>".
std::shared_ptr<const graph::RoadNetwork> network_from_arcs(int num_nodes, const std::vector<ArcSpec>& arcs);

// Random directed multigraph; no self-loops, parallel arcs allowed.
std::shared_ptr<const graph::RoadNetwork> random_network(Rng& rng, int num_nodes, int num_arcs,
                                                         double min_time = 10.0, double max_time = 300.0);

// Bidirectional rows x cols grid; every fourth row is an evacuation corridor.
std::shared_ptr<const graph::RoadNetwork> grid_network(int rows, int cols, double travel_time_s = 60.0);

// Depth per edge: zero with probability p_dry, else uniform in [0, max_depth].
graph::HazardScenario random_hazard(Rng& rng, const graph::RoadNetwork& net, std::string id,
                                    double p_dry = 0.5, double max_depth = 0.8);

// Same edges with every depth raised by a nonnegative random increment.
graph::HazardScenario deepen(Rng& rng, const graph::HazardScenario& base, std::string id, double max_increment = 0.4);

std::vector<graph::NodeIndex> distinct_nodes(Rng& rng, int num_nodes, int count);

// Random valid prompt of the given kind with deltas inside their ranges.
scenario::InterventionPrompt random_prompt(Rng& rng, scenario::InterventionKind kind);

// Sealed risk layer whose every edge carries the same multiplier.
service::RiskLayer uniform_layer(const graph::RoadNetwork& net, double multiplier, std::string generated_at);

// Small default-config synthetic city for fast tests.
data::SyntheticCity small_city(std::uint64_t seed, int buildings = 120, std::string id = "tst");

}  // namespace urbanrisk::testing
