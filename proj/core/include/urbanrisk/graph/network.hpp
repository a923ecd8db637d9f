#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "urbanrisk/geo.hpp"

namespace urbanrisk::graph {

using NodeIndex = std::int32_t;
using EdgeIndex = std::int32_t;

struct Node {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
};

struct EdgeSpec {
  std::string id;
  std::string from;
  std::string to;
  double travel_time_s = 0.0;  // free-flow
  double capacity = 1.0;
  bool is_evacuation = false;
};

struct Edge {
  std::string id;
  NodeIndex from = 0;
  NodeIndex to = 0;
  double travel_time_s = 0.0;
  double capacity = 1.0;
  bool is_evacuation = false;
};

/// Directed free-flow travel-time network. Immutable once built; adjacency is
/// stored in CSR form in both directions.
class RoadNetwork {
 public:
  // Throws ArgumentError on self-loops, non-positive travel times, duplicate
  // ids or dangling node references.
  static RoadNetwork build(std::vector<Node> nodes, std::span<const EdgeSpec> edges);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeIndex i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const Edge& edge(EdgeIndex e) const { return edges_[static_cast<std::size_t>(e)]; }

  std::optional<NodeIndex> find_node(std::string_view id) const;
  std::optional<EdgeIndex> find_edge(std::string_view id) const;
  NodeIndex node_index(std::string_view id) const;  // throws ArgumentError if unknown
  EdgeIndex edge_index(std::string_view id) const;  // throws ArgumentError if unknown

  std::span<const EdgeIndex> out_edges(NodeIndex n) const;
  std::span<const EdgeIndex> in_edges(NodeIndex n) const;

  // Undirected degree (distinct in + out edges).
  int degree(NodeIndex n) const;

  // Nearest node by planar distance; linear scan.
  NodeIndex nearest_node(geo::LatLon p) const;

  std::vector<EdgeSpec> edge_specs() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, NodeIndex> node_lookup_;
  std::unordered_map<std::string, EdgeIndex> edge_lookup_;
  std::vector<std::int32_t> out_offsets_, in_offsets_;
  std::vector<EdgeIndex> out_list_, in_list_;
};

enum class FacilityKind { kHospital, kFireStation, kShelter };

std::string_view facility_kind_name(FacilityKind k);
std::optional<FacilityKind> parse_facility_kind(std::string_view s);

struct Facility {
  std::string id;
  FacilityKind kind = FacilityKind::kHospital;
  std::string node_id;
};

struct ServicePoints {
  std::vector<Facility> facilities;

  // Throws ArgumentError if any facility references a node absent from the network.
  void validate(const RoadNetwork& network) const;
  // Emergency facilities (hospitals and fire stations) as node indices, sorted, unique.
  std::vector<NodeIndex> emergency_nodes(const RoadNetwork& network) const;
  std::vector<NodeIndex> shelter_nodes(const RoadNetwork& network) const;
};

struct EdgeDepth {
  std::string edge_id;
  double depth_m = 0.0;
};

struct HazardScenario {
  std::string id;
  std::vector<EdgeDepth> depths;  // edges absent => depth 0
  std::optional<double> probability;

  void validate() const;
};

/// Piecewise-linear flood inflation: depth below depth_free leaves the edge
/// untouched, depth at or above depth_impassable removes it, and in between
/// the weight is inflated by 1 + slope * (depth - depth_free).
struct HazardPolicy {
  std::string id = "piecewise-default";
  double depth_free_m = 0.10;
  double depth_impassable_m = 0.50;
  double inflation_per_m = 4.0;

  void validate() const;
};

struct EdgeState {
  bool removed = false;
  double multiplier = 1.0;      // meaningful only when retained
  double capacity_delta = 0.0;  // from transportation upgrades
};

class ConditionedNetwork {
 public:
  ConditionedNetwork(std::shared_ptr<const RoadNetwork> base, std::vector<EdgeState> states,
                     std::string scenario_id, std::string policy_id);

  // Identity conditioning: every edge retained with multiplier 1.
  static ConditionedNetwork free_flow(std::shared_ptr<const RoadNetwork> base);

  const RoadNetwork& base() const { return *base_; }
  const std::shared_ptr<const RoadNetwork>& base_ptr() const { return base_; }
  const std::vector<EdgeState>& states() const { return states_; }
  const EdgeState& state(EdgeIndex e) const { return states_[static_cast<std::size_t>(e)]; }
  const std::string& scenario_id() const { return scenario_id_; }
  const std::string& policy_id() const { return policy_id_; }

  bool retained(EdgeIndex e) const { return !states_[static_cast<std::size_t>(e)].removed; }
  // Hazard-conditioned travel time; +infinity for removed edges.
  double weight(EdgeIndex e) const;

  ConditionedNetwork with_states(std::vector<EdgeState> states, std::string policy_id) const;

 private:
  std::shared_ptr<const RoadNetwork> base_;
  std::vector<EdgeState> states_;
  std::string scenario_id_;
  std::string policy_id_;
};

double inflation_multiplier(double depth_m, const HazardPolicy& policy);

ConditionedNetwork condition_network(std::shared_ptr<const RoadNetwork> network,
                                     const HazardScenario& hazard, const HazardPolicy& policy);

}  // namespace urbanrisk::graph
