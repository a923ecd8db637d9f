#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "urbanrisk/graph/network.hpp"

namespace urbanrisk::graph {

struct Arc {
  NodeIndex from;
  NodeIndex to;
};

/// Maximum number of pairwise edge-disjoint source->sink paths, i.e. the
/// max-flow with unit capacity on every arc (Dinic). Parallel arcs count
/// separately.
int max_edge_disjoint_paths(std::size_t num_nodes, std::span<const Arc> arcs, NodeIndex source,
                            NodeIndex sink);

/// Evacuation redundancy K: edge-disjoint routes from building to shelter over
/// retained edges. Route length is not constrained by a time budget.
int evacuation_redundancy(const ConditionedNetwork& cn, NodeIndex building, NodeIndex shelter);

// Shelter with the smallest hazard travel time (ties by node id); nullopt if none reachable.
std::optional<NodeIndex> nearest_feasible_shelter(const ConditionedNetwork& cn, NodeIndex building,
                                                  std::span<const NodeIndex> shelters);

// K to the nearest feasible shelter; 0 when no shelter is reachable. A building
// sitting on a shelter node counts as fully redundant only through other shelters.
int redundancy_to_nearest_shelter(const ConditionedNetwork& cn, NodeIndex building,
                                  std::span<const NodeIndex> shelters);

}  // namespace urbanrisk::graph
