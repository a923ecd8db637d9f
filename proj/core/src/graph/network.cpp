#include "urbanrisk/graph/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::graph {

RoadNetwork RoadNetwork::build(std::vector<Node> nodes, std::span<const EdgeSpec> edges) {
  RoadNetwork net;
  net.nodes_ = std::move(nodes);
  for (std::size_t i = 0; i < net.nodes_.size(); ++i) {
    const auto& n = net.nodes_[i];
    if (!geo::valid_coordinates({n.lat, n.lon})) {
      throw ArgumentError("node " + n.id + " has invalid coordinates");
    }
    if (!net.node_lookup_.emplace(n.id, static_cast<NodeIndex>(i)).second) {
      throw ArgumentError("duplicate node id " + n.id);
    }
  }
  net.edges_.reserve(edges.size());
  for (const auto& spec : edges) {
    auto from = net.find_node(spec.from);
    auto to = net.find_node(spec.to);
    if (!from) throw ArgumentError("edge " + spec.id + " references unknown node " + spec.from);
    if (!to) throw ArgumentError("edge " + spec.id + " references unknown node " + spec.to);
    if (*from == *to) throw ArgumentError("edge " + spec.id + " is a self-loop");
    if (!(spec.travel_time_s > 0.0) || !std::isfinite(spec.travel_time_s)) {
      throw ArgumentError("edge " + spec.id + " has non-positive travel time");
    }
    if (!(spec.capacity >= 0.0) || !std::isfinite(spec.capacity)) {
      throw ArgumentError("edge " + spec.id + " has negative capacity");
    }
    const auto idx = static_cast<EdgeIndex>(net.edges_.size());
    if (!net.edge_lookup_.emplace(spec.id, idx).second) {
      throw ArgumentError("duplicate edge id " + spec.id);
    }
    net.edges_.push_back({spec.id, *from, *to, spec.travel_time_s, spec.capacity, spec.is_evacuation});
  }

  const std::size_t n = net.nodes_.size();
  net.out_offsets_.assign(n + 1, 0);
  net.in_offsets_.assign(n + 1, 0);
  for (const auto& e : net.edges_) {
    ++net.out_offsets_[static_cast<std::size_t>(e.from) + 1];
    ++net.in_offsets_[static_cast<std::size_t>(e.to) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    net.out_offsets_[i + 1] += net.out_offsets_[i];
    net.in_offsets_[i + 1] += net.in_offsets_[i];
  }
  net.out_list_.resize(net.edges_.size());
  net.in_list_.resize(net.edges_.size());
  auto out_pos = net.out_offsets_;
  auto in_pos = net.in_offsets_;
  for (std::size_t e = 0; e < net.edges_.size(); ++e) {
    const auto& edge = net.edges_[e];
    net.out_list_[static_cast<std::size_t>(out_pos[static_cast<std::size_t>(edge.from)]++)] =
        static_cast<EdgeIndex>(e);
    net.in_list_[static_cast<std::size_t>(in_pos[static_cast<std::size_t>(edge.to)]++)] =
        static_cast<EdgeIndex>(e);
  }
  return net;
}

std::optional<NodeIndex> RoadNetwork::find_node(std::string_view id) const {
  auto it = node_lookup_.find(std::string(id));
  if (it == node_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeIndex> RoadNetwork::find_edge(std::string_view id) const {
  auto it = edge_lookup_.find(std::string(id));
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

NodeIndex RoadNetwork::node_index(std::string_view id) const {
  auto n = find_node(id);
  if (!n) throw ArgumentError("unknown node " + std::string(id));
  return *n;
}

EdgeIndex RoadNetwork::edge_index(std::string_view id) const {
  auto e = find_edge(id);
  if (!e) throw ArgumentError("unknown edge " + std::string(id));
  return *e;
}

std::span<const EdgeIndex> RoadNetwork::out_edges(NodeIndex n) const {
  const auto i = static_cast<std::size_t>(n);
  return {out_list_.data() + out_offsets_[i],
          static_cast<std::size_t>(out_offsets_[i + 1] - out_offsets_[i])};
}

std::span<const EdgeIndex> RoadNetwork::in_edges(NodeIndex n) const {
  const auto i = static_cast<std::size_t>(n);
  return {in_list_.data() + in_offsets_[i],
          static_cast<std::size_t>(in_offsets_[i + 1] - in_offsets_[i])};
}

int RoadNetwork::degree(NodeIndex n) const {
  std::set<NodeIndex> neighbours;
  for (auto e : out_edges(n)) neighbours.insert(edge(e).to);
  for (auto e : in_edges(n)) neighbours.insert(edge(e).from);
  return static_cast<int>(neighbours.size());
}

NodeIndex RoadNetwork::nearest_node(geo::LatLon p) const {
  if (nodes_.empty()) throw ArgumentError("network has no nodes");
  NodeIndex best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double d = geo::distance_m(p, {nodes_[i].lat, nodes_[i].lon});
    if (d < best_d) {
      best_d = d;
      best = static_cast<NodeIndex>(i);
    }
  }
  return best;
}

std::vector<EdgeSpec> RoadNetwork::edge_specs() const {
  std::vector<EdgeSpec> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) {
    out.push_back({e.id, node(e.from).id, node(e.to).id, e.travel_time_s, e.capacity,
                   e.is_evacuation});
  }
  return out;
}

std::string_view facility_kind_name(FacilityKind k) {
  switch (k) {
    case FacilityKind::kHospital: return "hospital";
    case FacilityKind::kFireStation: return "fire_station";
    case FacilityKind::kShelter: return "shelter";
  }
  return "unknown";
}

std::optional<FacilityKind> parse_facility_kind(std::string_view s) {
  if (s == "hospital") return FacilityKind::kHospital;
  if (s == "fire_station") return FacilityKind::kFireStation;
  if (s == "shelter") return FacilityKind::kShelter;
  return std::nullopt;
}

void ServicePoints::validate(const RoadNetwork& network) const {
  for (const auto& f : facilities) {
    if (!network.find_node(f.node_id)) {
      throw ArgumentError("facility " + f.id + " attached to unknown node " + f.node_id);
    }
  }
}

namespace {

std::vector<NodeIndex> collect(const ServicePoints& sp, const RoadNetwork& net, bool shelters) {
  std::vector<NodeIndex> out;
  for (const auto& f : sp.facilities) {
    const bool is_shelter = f.kind == FacilityKind::kShelter;
    if (is_shelter == shelters) out.push_back(net.node_index(f.node_id));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<NodeIndex> ServicePoints::emergency_nodes(const RoadNetwork& network) const {
  return collect(*this, network, false);
}

std::vector<NodeIndex> ServicePoints::shelter_nodes(const RoadNetwork& network) const {
  return collect(*this, network, true);
}

void HazardScenario::validate() const {
  for (const auto& d : depths) {
    if (!std::isfinite(d.depth_m) || d.depth_m < 0.0) {
      throw ArgumentError("scenario " + id + ": edge " + d.edge_id +
                          " has negative or non-finite depth");
    }
  }
  if (probability && (!std::isfinite(*probability) || *probability < 0.0)) {
    throw ArgumentError("scenario " + id + ": invalid probability weight");
  }
}

void HazardPolicy::validate() const {
  if (!(depth_free_m >= 0.0) || !(depth_free_m < depth_impassable_m) ||
      !std::isfinite(depth_impassable_m)) {
    throw ArgumentError("hazard policy requires 0 <= depth_free < depth_impassable");
  }
  if (!(inflation_per_m >= 0.0) || !std::isfinite(inflation_per_m)) {
    throw ArgumentError("hazard policy inflation slope must be >= 0");
  }
}

ConditionedNetwork::ConditionedNetwork(std::shared_ptr<const RoadNetwork> base,
                                       std::vector<EdgeState> states, std::string scenario_id,
                                       std::string policy_id)
    : base_(std::move(base)),
      states_(std::move(states)),
      scenario_id_(std::move(scenario_id)),
      policy_id_(std::move(policy_id)) {
  if (!base_) throw ArgumentError("conditioned network requires a base network");
  if (states_.size() != base_->num_edges()) {
    throw ArgumentError("edge state count does not match the base network");
  }
  for (std::size_t e = 0; e < states_.size(); ++e) {
    auto& s = states_[e];
    if (s.removed) {
      s.multiplier = 1.0;
    } else if (!(s.multiplier >= 1.0) || !std::isfinite(s.multiplier)) {
      throw ArgumentError("edge " + base_->edge(static_cast<EdgeIndex>(e)).id +
                          " has multiplier < 1");
    }
  }
}

ConditionedNetwork ConditionedNetwork::free_flow(std::shared_ptr<const RoadNetwork> base) {
  const auto n = base ? base->num_edges() : 0;
  return ConditionedNetwork(std::move(base), std::vector<EdgeState>(n), "free-flow", "none");
}

double ConditionedNetwork::weight(EdgeIndex e) const {
  const auto& s = states_[static_cast<std::size_t>(e)];
  if (s.removed) return std::numeric_limits<double>::infinity();
  return base_->edge(e).travel_time_s * s.multiplier;
}

ConditionedNetwork ConditionedNetwork::with_states(std::vector<EdgeState> states,
                                                   std::string policy_id) const {
  return ConditionedNetwork(base_, std::move(states), scenario_id_, std::move(policy_id));
}

double inflation_multiplier(double depth_m, const HazardPolicy& policy) {
  if (depth_m < policy.depth_free_m) return 1.0;
  if (depth_m >= policy.depth_impassable_m) return std::numeric_limits<double>::infinity();
  return 1.0 + policy.inflation_per_m * (depth_m - policy.depth_free_m);
}

ConditionedNetwork condition_network(std::shared_ptr<const RoadNetwork> network,
                                     const HazardScenario& hazard, const HazardPolicy& policy) {
  if (!network) throw ArgumentError("condition_network requires a network");
  policy.validate();
  hazard.validate();
  std::vector<EdgeState> states(network->num_edges());
  for (const auto& d : hazard.depths) {
    auto e = network->find_edge(d.edge_id);
    if (!e) {
      throw ArgumentError("hazard scenario " + hazard.id + " references unknown edge " +
                          d.edge_id);
    }
    auto& s = states[static_cast<std::size_t>(*e)];
    const double m = inflation_multiplier(d.depth_m, policy);
    if (std::isinf(m)) {
      s.removed = true;
      s.multiplier = 1.0;
    } else {
      s.multiplier = m;
    }
  }
  return ConditionedNetwork(std::move(network), std::move(states), hazard.id, policy.id);
}

}  // namespace urbanrisk::graph
