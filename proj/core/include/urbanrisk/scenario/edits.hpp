#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanrisk/data/records.hpp"
#include "urbanrisk/graph/network.hpp"
#include "urbanrisk/scenario/prompt.hpp"

namespace urbanrisk::scenario {

struct BuildingEdit {
  std::string record_id;
  double m_flood = 1.0;
  double m_dam = 1.0;
  std::map<std::string, double> feature_deltas;  // "group.name" -> new - old
};

struct EdgeEdit {
  std::string edge_id;
  double m_road = 1.0;
  double capacity_delta = 0.0;
  bool removed = false;
  double multiplier_before = 1.0;
  double multiplier_after = 1.0;
};

struct EditReport {
  std::string prompt_id;
  std::vector<BuildingEdit> buildings;
  std::vector<EdgeEdit> edges;
  std::vector<std::string> warnings;
};

nlohmann::json report_to_json(const EditReport& r);

struct BuildingEditResult {
  std::vector<data::BuildingRecord> records;  // same order as the input
  EditReport report;
};

/// Applies the building part of a prompt. Green infrastructure lowers
/// imperviousness (floored at 0), scales drainage by 1 + calibration * delta
/// and rescales the flood-depth conditioning target by the flood multiplier.
/// Retrofits raise the structural score (capped at 100) and scale damage
/// probability. Unselected records are copied unchanged.
BuildingEditResult apply_building_edits(const InterventionPrompt& prompt,
                                        std::span<const data::BuildingRecord> records,
                                        double drainage_calibration = 1.0);

struct NetworkEditResult {
  graph::ConditionedNetwork network;
  EditReport report;
};

/// Transportation upgrade: each selected evacuation edge gains delta_cap
/// capacity and its inflation excess (multiplier - 1) is scaled by the road
/// multiplier. Removed edges stay removed; non-evacuation edges are skipped
/// with a warning. Throws ArgumentError for unknown edge ids or prompts of
/// another kind.
NetworkEditResult apply_network_edits(const InterventionPrompt& prompt,
                                      const graph::ConditionedNetwork& cn);

struct ComposedEdits {
  std::vector<data::BuildingRecord> records;
  graph::ConditionedNetwork network;
  std::vector<EditReport> reports;  // one per prompt, in order
};

// Sequential application in declared order.
ComposedEdits compose_edits(std::span<const InterventionPrompt> prompts,
                            std::span<const data::BuildingRecord> records,
                            const graph::ConditionedNetwork& cn,
                            double drainage_calibration = 1.0);

}  // namespace urbanrisk::scenario
