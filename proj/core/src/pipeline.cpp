#include "urbanrisk/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <map>

#include "urbanrisk/data/io.hpp"
#include "urbanrisk/errors.hpp"
#include "urbanrisk/random.hpp"

namespace urbanrisk::pipeline {

using data::Partition;
using nlohmann::json;

std::vector<data::SyntheticCity> generate(const PipelineConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<data::SyntheticCity> out;
  for (std::size_t i = 0; i < cfg.cities.size(); ++i) {
    out.push_back(data::synthesize_city(cfg.cities[i], derive_seed(seed, i)));
  }
  return out;
}

eval::SplitManifest make_split(const PipelineConfig& cfg, std::span<const data::SyntheticCity> cities,
                               std::uint64_t seed) {
  const auto records = data::all_records(cities);
  switch (cfg.split.regime) {
    case eval::SplitRegime::kTemporal:
      return eval::temporal_split(records, cfg.split.bounds);
    case eval::SplitRegime::kSpatialBlock:
      return eval::spatial_block_split(records, cfg.split.cell_km, cfg.split.test_frac, seed);
    case eval::SplitRegime::kUnseenCity:
      return eval::unseen_city_split(records, cfg.split.held_out_city);
  }
  throw ArgumentError("unknown split regime");
}

TrainOutcome train(const PipelineConfig& cfg, std::span<const data::SyntheticCity> cities,
                   const eval::SplitManifest& manifest, std::uint64_t seed) {
  eval::check_manifest_covers(manifest, data::all_records(cities));
  diffusion::Forecaster f(cfg.model, seed);
  auto tc = cfg.train;
  tc.seed = seed;
  auto history = f.fit(cities, manifest.partitions(), tc, cfg.policy);
  return {std::move(f), std::move(history)};
}

namespace {

struct PairRef {
  std::size_t city = 0;
  diffusion::ForecastPair pair;
};

std::string income_stratum(const data::BuildingRecord& r) {
  const auto q = r.find(data::FeatureGroup::kDemo, data::feature::kIncomeQuintile);
  return q ? "q" + std::to_string(static_cast<int>(std::lround(*q))) : "unknown";
}

}  // namespace

Evaluation evaluate(const PipelineConfig& cfg, std::span<const data::SyntheticCity> cities,
                    const eval::SplitManifest& manifest, const diffusion::Forecaster& forecaster,
                    std::uint64_t seed) {
  if (!cfg.eval.q) throw ConfigError("eval.q (recall@top-q percentage) must be set");
  if (!forecaster.trained()) throw StateError("forecaster has not been trained");
  eval::check_manifest_covers(manifest, data::all_records(cities));
  const auto partitions = manifest.partitions();

  std::vector<PairRef> pairs;
  double train_sum = 0.0;
  std::size_t train_n = 0;
  for (std::size_t c = 0; c < cities.size(); ++c) {
    const auto& ds = cities[c].dataset;
    // Prompts for every city come from its profile and network access only.
    eval::audit_prompt_inputs(manifest, {ds.city_id, {}, false});
    for (const auto& r : ds.records) {
      if (partitions.at(r.id) == Partition::kTrain) {
        train_sum += r.targets.flood_depth;
        ++train_n;
      }
    }
    for (const auto& p : diffusion::forecast_pairs(ds)) {
      if (partitions.at(ds.records[p.target].id) == Partition::kTest) pairs.push_back({c, p});
    }
  }
  if (train_n == 0) throw ArgumentError("manifest has no train records");
  if (pairs.empty()) throw ArgumentError("no test record has an earlier observation to forecast from");

  Evaluation out;
  out.test_pairs = pairs.size();
  if (cfg.eval.max_pairs > 0 && pairs.size() > cfg.eval.max_pairs) {
    std::vector<PairRef> thinned;
    for (std::size_t k = 0; k < cfg.eval.max_pairs; ++k) thinned.push_back(pairs[k * pairs.size() / cfg.eval.max_pairs]);
    pairs = std::move(thinned);
  }
  out.evaluated_pairs = pairs.size();

  // Conditioning per (city, source year), one matrix per horizon.
  std::map<std::pair<std::size_t, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    groups[{p.city, cities[p.city].dataset.records[p.pair.source].year}].push_back(i);
  }
  const Eigen::Index cond_dim = forecaster.config().cond_dim();
  Eigen::MatrixXd cond(cond_dim, static_cast<Eigen::Index>(pairs.size()));
  std::vector<std::uint64_t> seeds(pairs.size());
  for (const auto& [key, members] : groups) {
    const auto& city = cities[key.first];
    const auto snap = diffusion::make_snapshot(city, key.second, cfg.policy);
    std::map<std::string, Eigen::Index, std::less<>> local;
    for (std::size_t i = 0; i < snap.records.size(); ++i) local[snap.records[i].id] = static_cast<Eigen::Index>(i);
    std::vector<int> horizons;
    for (auto i : members) horizons.push_back(pairs[i].pair.horizon);
    std::sort(horizons.begin(), horizons.end());
    horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
    const auto conds = forecaster.conditioning(snap, horizons);
    for (auto i : members) {
      const auto& p = pairs[i].pair;
      const auto& src = city.dataset.records[p.source];
      const auto h = static_cast<std::size_t>(std::lower_bound(horizons.begin(), horizons.end(), p.horizon) - horizons.begin());
      cond.col(static_cast<Eigen::Index>(i)) = conds[h].col(local.at(src.id));
      seeds[i] = derive_seed(diffusion::building_seed(seed, src.building_id), static_cast<std::uint64_t>(p.horizon));
    }
  }
  const auto sets = forecaster.sample_conditioned(cond, seeds, cfg.eval.samples);

  // Accessibility of the target records on their own year's network.
  std::map<std::string, graph::BuildingAccess> access;
  std::map<std::pair<std::size_t, int>, bool> done;
  for (const auto& p : pairs) {
    const auto& city = cities[p.city];
    const int year = city.dataset.records[p.pair.target].year;
    if (done[{p.city, year}]) continue;
    done[{p.city, year}] = true;
    const auto snap = diffusion::make_snapshot(city, year, cfg.policy);
    const auto& net = snap.network->base();
    const auto nodes = diffusion::record_nodes(net, snap.records);
    const auto acc = graph::building_access(*snap.network, nodes, city.services.emergency_nodes(net),
                                            city.services.shelter_nodes(net), cfg.time_budget_s);
    for (std::size_t i = 0; i < snap.records.size(); ++i) access[snap.records[i].id] = acc[i];
  }

  const auto& edges = cfg.eval.flood_class_edges;
  const double high = edges.back();
  const int high_class = static_cast<int>(edges.size());
  const double train_mean = train_sum / static_cast<double>(train_n);
  eval::MetricInputs in;
  std::vector<std::string> strata;
  double baseline_abs = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& target = cities[pairs[i].city].dataset.records[pairs[i].pair.target];
    const auto& s = sets[i];
    const double truth = target.targets.flood_depth;
    const double mean = s.mean(0);
    double above = 0.0;
    for (Eigen::Index k = 0; k < s.samples.rows(); ++k) above += s.samples(k, 0) >= high ? 1.0 : 0.0;
    in.ids.push_back(target.id + "@h" + std::to_string(pairs[i].pair.horizon));
    in.true_class.push_back(eval::value_class(truth, edges));
    in.predicted_class.push_back(eval::value_class(mean, edges));
    in.true_value.push_back(truth);
    in.predicted_value.push_back(mean);
    in.prob_high.push_back(above / static_cast<double>(s.samples.rows()));
    in.is_high.push_back(eval::value_class(truth, edges) == high_class);
    in.ci_low.push_back(s.ci_low(0));
    in.ci_high.push_back(s.ci_high(0));
    const auto& a = access.at(target.id);
    in.reachable.push_back(a.reachable);
    in.travel_time_s.push_back(a.travel_time_s);
    in.redundancy.push_back(a.redundancy);
    strata.push_back(income_stratum(target));
    baseline_abs += std::abs(train_mean - truth);
  }
  out.report = eval::compute_report(in, *cfg.eval.q);
  out.by_income = eval::subgroup_report(in, strata, *cfg.eval.q);
  out.baseline_flood_mae = baseline_abs / static_cast<double>(pairs.size());
  return out;
}

json evaluation_to_json(const Evaluation& e) {
  return {{"schema_version", eval::kReportSchemaVersion},
          {"test_pairs", e.test_pairs},
          {"evaluated_pairs", e.evaluated_pairs},
          {"baseline_flood_mae", e.baseline_flood_mae},
          {"report", eval::report_to_json(e.report)},
          {"subgroups", {{"income_quintile", eval::subgroup_to_json(e.by_income)}}}};
}

int latest_year(const data::SyntheticCity& city) {
  if (city.dataset.records.empty()) throw ArgumentError("city " + city.dataset.city_id + " has no records");
  int y = city.dataset.records.front().year;
  for (const auto& r : city.dataset.records) y = std::max(y, r.year);
  return y;
}

scenario::ScenarioResult run_scenario(const PipelineConfig& cfg, const data::SyntheticCity& city,
                                      const diffusion::Forecaster& forecaster,
                                      std::span<const scenario::InterventionPrompt> prompts,
                                      std::uint64_t seed, std::optional<int> year) {
  const int y = year.value_or(latest_year(city));
  const auto snap = diffusion::make_snapshot(city, y, cfg.policy);
  scenario::HazardEnsemble ensemble;
  if (cfg.scenario.ensemble_members > 1) {
    const auto id = data::scenario_id_for_year(city.dataset.city_id, y);
    auto it = std::find_if(city.scenarios.begin(), city.scenarios.end(),
                           [&](const graph::HazardScenario& h) { return h.id == id; });
    if (it != city.scenarios.end()) {
      for (const auto& m : data::scenario_ensemble(*it, cfg.scenario.ensemble_members, seed, cfg.scenario.ensemble_spread)) {
        ensemble.members.push_back(graph::condition_network(city.network, m, cfg.policy));
      }
    }
  }
  scenario::CounterfactualOptions opts;
  opts.horizon = cfg.scenario.horizon;
  opts.samples = cfg.scenario.samples;
  opts.seed = seed;
  opts.sensitivity = cfg.scenario.sensitivity;
  opts.time_budget_s = cfg.time_budget_s;
  opts.max_risk_buildings = cfg.scenario.max_risk_buildings;
  return scenario::run_counterfactual(prompts, snap, ensemble, forecaster, opts);
}

service::RiskLayer build_layer(const PipelineConfig& cfg, const data::SyntheticCity& city, int year,
                               const std::string& generated_at) {
  const auto snap = diffusion::make_snapshot(city, year, cfg.policy);
  return service::build_risk_layer(*snap.network, snap.records, city.services,
                                   {city.center, cfg.service.zone_km}, cfg.time_budget_s, generated_at,
                                   cfg.service.cadence_s);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace urbanrisk::pipeline
