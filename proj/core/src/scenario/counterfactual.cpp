#include "urbanrisk/scenario/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::scenario {

using diffusion::SampleSet;
using diffusion::Snapshot;
using nlohmann::json;

namespace {

struct AccessContext {
  std::vector<graph::NodeIndex> nodes, facilities, shelters;
};

AccessContext access_context(const Snapshot& s) {
  const auto& net = s.network->base();
  return {diffusion::record_nodes(net, s.records), s.city->services.emergency_nodes(net),
          s.city->services.shelter_nodes(net)};
}

graph::AccessibilitySummary ensemble_summary(std::span<const graph::ConditionedNetwork> members,
                                             std::span<const double> weights, const AccessContext& ctx,
                                             double budget) {
  return graph::ensemble_accessibility(members, weights, ctx.nodes, ctx.facilities, ctx.shelters, budget)
      .summary;
}

graph::ConditionedNetwork edit_network(std::span<const InterventionPrompt> prompts,
                                       const graph::ConditionedNetwork& cn) {
  graph::ConditionedNetwork out = cn;
  for (const auto& p : prompts) {
    if (p.edits_network()) out = apply_network_edits(p, out).network;
  }
  return out;
}

void check_inputs(std::span<const InterventionPrompt> prompts, const Snapshot& s,
                  const HazardEnsemble& ensemble) {
  if (!s.city || !s.network) throw ArgumentError("snapshot needs a city and a network");
  for (const auto& p : prompts) p.validate();
  for (const auto& m : ensemble.members) {
    if (m.base_ptr() != s.network->base_ptr()) {
      throw ArgumentError("hazard ensemble member " + m.scenario_id() +
                          " is conditioned on a different road network");
    }
  }
  if (!ensemble.weights.empty() && ensemble.weights.size() != ensemble.members.size()) {
    throw ArgumentError("one ensemble weight per member is required");
  }
}

struct Members {
  std::vector<graph::ConditionedNetwork> nets;
  std::vector<double> weights;
};

Members members_of(const Snapshot& s, const HazardEnsemble& ensemble) {
  Members m;
  if (ensemble.members.empty()) {
    m.nets.push_back(*s.network);
    m.weights = {1.0};
  } else {
    m.nets = ensemble.members;
    m.weights = ensemble.weights.empty()
                    ? std::vector<double>(m.nets.size(), 1.0 / static_cast<double>(m.nets.size()))
                    : ensemble.weights;
  }
  return m;
}

AccessibilityDelta make_delta(graph::AccessibilitySummary base, graph::AccessibilitySummary edited) {
  AccessibilityDelta d;
  d.reachability_rate = edited.reachability_rate - base.reachability_rate;
  d.mean_redundancy = edited.mean_redundancy - base.mean_redundancy;
  if (base.mean_travel_time_s && edited.mean_travel_time_s) {
    d.mean_travel_time_s = *edited.mean_travel_time_s - *base.mean_travel_time_s;
  }
  d.baseline = std::move(base);
  d.edited = std::move(edited);
  return d;
}

std::vector<std::size_t> risk_selection(std::span<const InterventionPrompt> prompts, const Snapshot& s,
                                        std::size_t& selected) {
  bool all = true;
  std::vector<const TargetSelector*> selectors;
  for (const auto& p : prompts) {
    if (!p.edits_buildings()) continue;
    if (p.selector.selects_all_buildings()) {
      all = true;
      selectors.clear();
      break;
    }
    all = false;
    selectors.push_back(&p.selector);
  }
  std::vector<std::size_t> which;
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    if (all || std::any_of(selectors.begin(), selectors.end(),
                           [&](const TargetSelector* sel) { return sel->matches(s.records[i]); })) {
      which.push_back(i);
    }
  }
  std::sort(which.begin(), which.end(),
            [&](std::size_t a, std::size_t b) { return s.records[a].id < s.records[b].id; });
  selected = which.size();
  return which;
}

std::vector<std::size_t> thin(std::vector<std::size_t> which, std::size_t cap) {
  if (cap == 0 || which.size() <= cap) return which;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < cap; ++k) out.push_back(which[k * which.size() / cap]);
  return out;
}

}  // namespace

AccessibilityDelta accessibility_delta(std::span<const InterventionPrompt> prompts, const Snapshot& s,
                                       const HazardEnsemble& ensemble, double time_budget_s) {
  check_inputs(prompts, s, ensemble);
  const auto ctx = access_context(s);
  const auto m = members_of(s, ensemble);
  std::vector<graph::ConditionedNetwork> edited;
  for (const auto& cn : m.nets) edited.push_back(edit_network(prompts, cn));
  return make_delta(ensemble_summary(m.nets, m.weights, ctx, time_budget_s),
                    ensemble_summary(edited, m.weights, ctx, time_budget_s));
}

ScenarioResult run_counterfactual(std::span<const InterventionPrompt> prompts, const Snapshot& s,
                                  const HazardEnsemble& ensemble,
                                  const diffusion::Forecaster& forecaster,
                                  const CounterfactualOptions& options) {
  check_inputs(prompts, s, ensemble);
  if (!forecaster.trained()) throw StateError("forecaster has not been trained");
  if (options.samples < 2) throw ArgumentError("at least 2 samples per building are required");

  ScenarioResult result;
  result.city_id = s.city->dataset.city_id;
  result.year = s.year;
  result.horizon = options.horizon;
  result.samples = options.samples;
  result.seed = options.seed;

  const auto ctx = access_context(s);
  const auto m = members_of(s, ensemble);
  const auto base_access = ensemble_summary(m.nets, m.weights, ctx, options.time_budget_s);

  const auto which = thin(risk_selection(prompts, s, result.risk_buildings_selected),
                          options.max_risk_buildings);
  const auto baseline = forecaster.sample(s, options.horizon, which, options.samples, options.seed);

  std::vector<double> factors{1.0};
  if (options.sensitivity) factors.insert(factors.end(), {0.5, 1.5});
  for (double f : factors) {
    ScenarioVariant v;
    v.factor = f;
    for (const auto& p : prompts) v.prompts.push_back(f == 1.0 ? p : scaled_prompt(p, f));

    auto composed = compose_edits(v.prompts, s.records, *s.network, options.drainage_calibration);
    v.reports = std::move(composed.reports);
    v.network = std::make_shared<const graph::ConditionedNetwork>(std::move(composed.network));

    std::vector<graph::ConditionedNetwork> edited;
    for (const auto& cn : m.nets) edited.push_back(edit_network(v.prompts, cn));
    v.access = make_delta(base_access, ensemble_summary(edited, m.weights, ctx, options.time_budget_s));

    Snapshot es{s.city, s.year, std::move(composed.records), v.network};
    auto after = forecaster.sample(es, options.horizon, which, options.samples, options.seed);
    for (std::size_t j = 0; j < which.size(); ++j) {
      const auto& r = s.records[which[j]];
      BuildingRisk b{r.id, r.building_id, baseline[j], std::move(after[j]), {}};
      b.delta = diffusion::summarize_samples(b.edited.samples - b.baseline.samples);
      v.buildings.push_back(std::move(b));
    }
    result.variants.push_back(std::move(v));
  }
  return result;
}

namespace {

json summary_json(const graph::AccessibilitySummary& s) {
  return {{"buildings", s.buildings},
          {"reachability_rate", s.reachability_rate},
          {"mean_travel_time_s", s.mean_travel_time_s ? json(*s.mean_travel_time_s) : json(nullptr)},
          {"mean_redundancy", s.mean_redundancy}};
}

json targets_json(const SampleSet& s) {
  json out = json::object();
  for (std::size_t k = 0; k < data::kTargetNames.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out[std::string(data::kTargetNames[k])] = {
        {"mean", s.mean(i)}, {"ci_low", s.ci_low(i)}, {"ci_high", s.ci_high(i)}};
  }
  return out;
}

}  // namespace

json scenario_result_to_json(const ScenarioResult& r) {
  json variants = json::array();
  for (const auto& v : r.variants) {
    json prompts = json::array(), reports = json::array(), buildings = json::array();
    for (const auto& p : v.prompts) prompts.push_back(prompt_to_json(p));
    for (const auto& rep : v.reports) reports.push_back(report_to_json(rep));
    for (const auto& b : v.buildings) {
      buildings.push_back({{"record_id", b.record_id},
                           {"building_id", b.building_id},
                           {"baseline", targets_json(b.baseline)},
                           {"edited", targets_json(b.edited)},
                           {"delta", targets_json(b.delta)}});
    }
    const auto& a = v.access;
    variants.push_back(
        {{"factor", v.factor},
         {"prompts", prompts},
         {"edit_reports", reports},
         {"accessibility",
          {{"baseline", summary_json(a.baseline)},
           {"edited", summary_json(a.edited)},
           {"delta",
            {{"reachability_rate", a.reachability_rate},
             {"mean_travel_time_s", a.mean_travel_time_s ? json(*a.mean_travel_time_s) : json(nullptr)},
             {"mean_redundancy", a.mean_redundancy}}}}},
         {"buildings", buildings}});
  }
  return {{"schema_version", kScenarioResultSchemaVersion},
          {"city_id", r.city_id},
          {"year", r.year},
          {"horizon", r.horizon},
          {"samples", r.samples},
          {"seed", r.seed},
          {"risk_buildings_selected", r.risk_buildings_selected},
          {"variants", variants}};
}

}  // namespace urbanrisk::scenario
