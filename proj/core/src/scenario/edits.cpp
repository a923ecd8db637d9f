#include "urbanrisk/scenario/edits.hpp"

#include <algorithm>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::scenario {

using data::FeatureGroup;
using nlohmann::json;

json report_to_json(const EditReport& r) {
  json buildings = json::array();
  for (const auto& b : r.buildings) {
    buildings.push_back({{"record_id", b.record_id},
                         {"m_flood", b.m_flood},
                         {"m_dam", b.m_dam},
                         {"feature_deltas", b.feature_deltas}});
  }
  json edges = json::array();
  for (const auto& e : r.edges) {
    json je = {{"edge_id", e.edge_id},
               {"m_road", e.m_road},
               {"capacity_delta", e.capacity_delta},
               {"removed", e.removed}};
    if (!e.removed) {
      je["multiplier_before"] = e.multiplier_before;
      je["multiplier_after"] = e.multiplier_after;
    }
    edges.push_back(std::move(je));
  }
  return {{"prompt_id", r.prompt_id},
          {"buildings", std::move(buildings)},
          {"edges", std::move(edges)},
          {"warnings", r.warnings}};
}

namespace {

// Sets a feature and records the change. Returns false if the group is masked
// or the feature is absent.
bool edit_feature(data::BuildingRecord& r, BuildingEdit& edit, FeatureGroup g,
                  std::string_view name, double (*fn)(double, double), double arg) {
  if (r.is_missing(g)) return false;
  auto old = r.find(g, name);
  if (!old) return false;
  const double updated = fn(*old, arg);
  r.set(g, name, updated);
  edit.feature_deltas[data::feature_key(g, name)] = updated - *old;
  return true;
}

}  // namespace

BuildingEditResult apply_building_edits(const InterventionPrompt& prompt,
                                        std::span<const data::BuildingRecord> records,
                                        double drainage_calibration) {
  prompt.validate();
  if (!(drainage_calibration >= 0.0)) throw ArgumentError("drainage calibration must be >= 0");
  BuildingEditResult out;
  out.records.assign(records.begin(), records.end());
  out.report.prompt_id = prompt.id;
  if (!prompt.edits_buildings()) return out;

  const auto& d = prompt.deltas;
  const double m_flood = flood_multiplier(d.drainage);
  const double m_dam = damage_multiplier(d.structural);
  namespace f = data::feature;

  for (auto& r : out.records) {
    if (!prompt.selector.matches(r)) continue;
    BuildingEdit edit;
    edit.record_id = r.id;
    auto warn = [&](std::string_view what) {
      out.report.warnings.push_back(r.id + ": " + std::string(what) + " unavailable, not edited");
    };
    if (prompt.kind == InterventionKind::kGreenInfrastructure) {
      edit.m_flood = m_flood;
      // Zero deltas leave features bitwise untouched.
      if (d.imperviousness > 0.0 &&
          !edit_feature(r, edit, FeatureGroup::kInfra, f::kImperviousness,
                        [](double v, double a) { return std::max(0.0, v - a); }, d.imperviousness)) {
        warn(f::kImperviousness);
      }
      if (d.drainage > 0.0 &&
          !edit_feature(r, edit, FeatureGroup::kInfra, f::kDrainageCapacity,
                        [](double v, double a) { return v * (1.0 + a); },
                        drainage_calibration * d.drainage)) {
        warn(f::kDrainageCapacity);
      }
      r.targets.flood_depth *= m_flood;
    } else {
      edit.m_dam = m_dam;
      if (d.structural > 0.0 &&
          !edit_feature(r, edit, FeatureGroup::kStruct, f::kStructuralScore,
                        [](double v, double a) { return std::min(100.0, v + a); }, d.structural)) {
        warn(f::kStructuralScore);
      }
      if (!edit_feature(r, edit, FeatureGroup::kStruct, f::kDamageProbability,
                        [](double v, double m) { return v * m; }, m_dam)) {
        warn(f::kDamageProbability);
      }
    }
    out.report.buildings.push_back(std::move(edit));
  }
  if (out.report.buildings.empty()) {
    out.report.warnings.push_back("selector matched no building");
  }
  return out;
}

NetworkEditResult apply_network_edits(const InterventionPrompt& prompt,
                                      const graph::ConditionedNetwork& cn) {
  prompt.validate();
  if (!prompt.edits_network()) {
    throw ArgumentError("network edits require a transportation_upgrade prompt, got " +
                        std::string(kind_name(prompt.kind)));
  }
  const auto& net = cn.base();
  std::vector<graph::EdgeIndex> selected;
  EditReport report;
  report.prompt_id = prompt.id;
  if (prompt.selector.edge_ids) {
    for (const auto& id : *prompt.selector.edge_ids) {
      auto e = net.find_edge(id);
      if (!e) throw ArgumentError("prompt " + prompt.id + " selects unknown edge " + id);
      if (!net.edge(*e).is_evacuation) {
        report.warnings.push_back(id + ": not an evacuation edge, skipped");
        continue;
      }
      selected.push_back(*e);
    }
    std::sort(selected.begin(), selected.end());
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  } else {
    for (std::size_t e = 0; e < net.num_edges(); ++e) {
      if (net.edges()[e].is_evacuation) selected.push_back(static_cast<graph::EdgeIndex>(e));
    }
  }

  const double delta = prompt.deltas.capacity;
  const double m_road = road_multiplier(delta);
  auto states = cn.states();
  for (auto e : selected) {
    auto& s = states[static_cast<std::size_t>(e)];
    EdgeEdit edit{net.edge(e).id, m_road, delta, s.removed, s.multiplier, s.multiplier};
    s.capacity_delta += delta;
    if (!s.removed && delta > 0.0) {
      s.multiplier = 1.0 + (s.multiplier - 1.0) * m_road;
      edit.multiplier_after = s.multiplier;
    }
    report.edges.push_back(std::move(edit));
  }
  if (selected.empty()) report.warnings.push_back("selector matched no evacuation edge");
  return {cn.with_states(std::move(states), cn.policy_id()), std::move(report)};
}

ComposedEdits compose_edits(std::span<const InterventionPrompt> prompts,
                            std::span<const data::BuildingRecord> records,
                            const graph::ConditionedNetwork& cn, double drainage_calibration) {
  ComposedEdits out{{records.begin(), records.end()}, cn, {}};
  for (const auto& p : prompts) {
    if (p.edits_network()) {
      auto r = apply_network_edits(p, out.network);
      out.network = std::move(r.network);
      out.reports.push_back(std::move(r.report));
    } else {
      auto r = apply_building_edits(p, out.records, drainage_calibration);
      out.records = std::move(r.records);
      out.reports.push_back(std::move(r.report));
    }
  }
  return out;
}

}  // namespace urbanrisk::scenario
