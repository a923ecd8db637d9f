// urbanrisk: command-line front end for data generation, splitting, training,
// evaluation, scenario runs and the layer service.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "urbanrisk/config.hpp"
#include "urbanrisk/data/io.hpp"
#include "urbanrisk/errors.hpp"
#include "urbanrisk/graph/accessibility.hpp"
#include "urbanrisk/graph/weight_layer.hpp"
#include "urbanrisk/pipeline.hpp"
#include "urbanrisk/service/http_server.hpp"
#include "urbanrisk/service/layer_store.hpp"
#include "urbanrisk/service/scenario_service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace urbanrisk;

namespace {

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

struct Common {
  std::string config;
  std::uint64_t seed = 0;
};

PipelineConfig config_of(const Common& c) {
  return c.config.empty() ? default_config() : load_config(c.config);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

const data::SyntheticCity& pick_city(const std::vector<data::SyntheticCity>& cities, const std::string& id) {
  if (id.empty()) return cities.front();
  for (const auto& c : cities) {
    if (c.dataset.city_id == id) return c;
  }
  throw ArgumentError("unknown city id: " + id);
}

std::vector<scenario::InterventionPrompt> read_prompts(const fs::path& path) {
  const auto j = read_json(path);
  std::vector<scenario::InterventionPrompt> out;
  if (j.is_array()) {
    for (const auto& p : j) out.push_back(scenario::prompt_from_json(p));
  } else {
    out.push_back(scenario::prompt_from_json(j));
  }
  return out;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return "validation";
  if (dynamic_cast<const ArgumentError*>(&e)) return "argument";
  if (dynamic_cast<const StateError*>(&e)) return "state";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const FormatError*>(&e)) return "format";
  if (dynamic_cast<const LeakageError*>(&e)) return "leakage";
  if (dynamic_cast<const TrainingDiverged*>(&e)) return "diverged";
  if (dynamic_cast<const ServiceUnavailable*>(&e)) return "unavailable";
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return "io";
  return "internal";
}

std::string one_line(std::string s) {
  for (auto& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hazard-conditioned accessibility and counterfactual risk engine"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "TOML config file (defaults apply when omitted)");
  app.add_option("--seed", common.seed, "Seed for every random choice");

  std::string data_dir, out, manifest_path, model_path, prompt_path, city_id, history_path, reliability_path;
  std::optional<int> year;
  std::string scenario_id;

  auto* gen = app.add_subcommand("generate-data", "Synthesize the configured cities into a corpus directory");
  gen->add_option("--out", out, "Corpus directory")->required();

  auto* split = app.add_subcommand("split", "Write a split manifest for the corpus");
  split->add_option("--data", data_dir, "Corpus directory")->required();
  split->add_option("--out", out, "Manifest JSON path")->required();

  auto* train = app.add_subcommand("train", "Train the forecaster and write a checkpoint");
  train->add_option("--data", data_dir, "Corpus directory")->required();
  train->add_option("--manifest", manifest_path, "Split manifest")->required();
  train->add_option("--out", out, "Checkpoint path")->required();
  train->add_option("--history", history_path, "Training history CSV path");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on the manifest's test partition");
  evaluate->add_option("--data", data_dir, "Corpus directory")->required();
  evaluate->add_option("--manifest", manifest_path, "Split manifest")->required();
  evaluate->add_option("--model", model_path, "Checkpoint")->required();
  evaluate->add_option("--out", out, "MetricReport JSON path")->required();
  evaluate->add_option("--reliability", reliability_path, "Reliability bins CSV path");

  auto* condition = app.add_subcommand("condition", "Condition the network on a hazard scenario");
  condition->add_option("--data", data_dir, "Corpus directory")->required();
  condition->add_option("--city", city_id, "City id (first city when omitted)");
  condition->add_option("--year", year, "Year whose scenario to use (latest when omitted)");
  condition->add_option("--scenario-id", scenario_id, "Explicit hazard scenario id");
  condition->add_option("--out", out, "Weight layer GeoJSON path")->required();

  auto* scen = app.add_subcommand("scenario", "Run a counterfactual intervention scenario");
  scen->add_option("--data", data_dir, "Corpus directory")->required();
  scen->add_option("--model", model_path, "Checkpoint")->required();
  scen->add_option("--prompt", prompt_path, "Prompt JSON (object or array)")->required();
  scen->add_option("--city", city_id, "City id (first city when omitted)");
  scen->add_option("--year", year, "Snapshot year (latest when omitted)");
  scen->add_option("--out", out, "Scenario result JSON path")->required();

  auto* layer = app.add_subcommand("export-layer", "Write the risk layer for one city and year");
  layer->add_option("--data", data_dir, "Corpus directory")->required();
  layer->add_option("--city", city_id, "City id (first city when omitted)");
  layer->add_option("--year", year, "Year (latest when omitted)");
  layer->add_option("--out", out, "Risk layer JSON path")->required();

  auto* serve = app.add_subcommand("serve", "Publish risk layers and serve the HTTP API");
  std::string host;
  int port = -1;
  double cadence_s = 0.0, duration_s = 0.0;
  serve->add_option("--data", data_dir, "Corpus directory")->required();
  serve->add_option("--model", model_path, "Checkpoint enabling POST /scenarios");
  serve->add_option("--city", city_id, "City id (first city when omitted)");
  serve->add_option("--year", year, "Year (latest when omitted)");
  serve->add_option("--host", host, "Bind address (config service.host by default)");
  serve->add_option("--port", port, "Port; 0 picks a free one (config service.port by default)");
  serve->add_option("--cadence-s", cadence_s, "Layer refresh cadence in seconds (config default 900)");
  serve->add_option("--duration-s", duration_s, "Stop after this many seconds (0 runs until SIGINT)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n" << app.help();
    return 2;
  }

  try {
    const auto cfg = config_of(common);
    const auto seed = common.seed;

    if (*gen) {
      const auto cities = pipeline::generate(cfg, seed);
      data::save_corpus(out, cities);
      std::size_t n = 0;
      for (const auto& c : cities) n += c.dataset.records.size();
      std::cout << "wrote " << cities.size() << " cities, " << n << " records to " << out << "\n";
    } else if (*split) {
      const auto cities = data::load_corpus(data_dir);
      const auto m = pipeline::make_split(cfg, cities, seed);
      const auto problems = eval::audit_manifest(m);
      if (!problems.empty()) throw LeakageError("manifest audit failed: " + problems.front());
      write_text(out, eval::manifest_to_json(m).dump(2) + "\n");
      for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "train " << m.count(data::Partition::kTrain) << ", val " << m.count(data::Partition::kVal)
                << ", test " << m.count(data::Partition::kTest) << "\n";
    } else if (*train) {
      const auto cities = data::load_corpus(data_dir);
      const auto m = eval::manifest_from_json(read_json(manifest_path));
      auto result = pipeline::train(cfg, cities, m, seed);
      result.forecaster.save(out);
      if (!history_path.empty()) write_text(history_path, result.history.to_csv());
      const double last = result.history.epochs.empty() ? result.history.initial_probe
                                                        : result.history.epochs.back().probe;
      std::cout << "probe loss " << result.history.initial_probe << " -> " << last << "\n";
    } else if (*evaluate) {
      const auto cities = data::load_corpus(data_dir);
      const auto m = eval::manifest_from_json(read_json(manifest_path));
      const auto f = diffusion::Forecaster::load(model_path);
      const auto e = pipeline::evaluate(cfg, cities, m, f, seed);
      write_text(out, pipeline::evaluation_to_json(e).dump(2) + "\n");
      if (!reliability_path.empty()) write_text(reliability_path, eval::reliability_csv(e.report));
      std::cout << "flood MAE " << e.report.mae << " (train-mean " << e.baseline_flood_mae << "), coverage_90 "
                << e.report.coverage_90 << "\n";
    } else if (*condition) {
      const auto cities = data::load_corpus(data_dir);
      const auto& city = pick_city(cities, city_id);
      const int y = year.value_or(pipeline::latest_year(city));
      auto snap = diffusion::make_snapshot(city, y, cfg.policy);
      if (!scenario_id.empty()) {
        auto it = std::find_if(city.scenarios.begin(), city.scenarios.end(),
                               [&](const graph::HazardScenario& h) { return h.id == scenario_id; });
        if (it == city.scenarios.end()) throw ArgumentError("unknown scenario id: " + scenario_id);
        snap.network = std::make_shared<const graph::ConditionedNetwork>(
            graph::condition_network(city.network, *it, cfg.policy));
      }
      write_text(out, graph::export_weight_layer(*snap.network, pipeline::utc_timestamp()) + "\n");
      const auto& net = snap.network->base();
      const auto access = graph::accessibility_summary(*snap.network, diffusion::record_nodes(net, snap.records),
                                                       city.services.emergency_nodes(net),
                                                       city.services.shelter_nodes(net), cfg.time_budget_s);
      const auto& s = access.summary;
      json summary = {{"scenario_id", snap.network->scenario_id()},
                      {"buildings", s.buildings},
                      {"reachability_rate", s.reachability_rate},
                      {"mean_travel_time_s", s.mean_travel_time_s ? json(*s.mean_travel_time_s) : json(nullptr)},
                      {"mean_redundancy", s.mean_redundancy}};
      std::cout << summary.dump() << "\n";
    } else if (*scen) {
      const auto cities = data::load_corpus(data_dir);
      const auto& city = pick_city(cities, city_id);
      const auto f = diffusion::Forecaster::load(model_path);
      const auto prompts = read_prompts(prompt_path);
      const auto r = pipeline::run_scenario(cfg, city, f, prompts, seed, year);
      write_text(out, scenario::scenario_result_to_json(r).dump(2) + "\n");
      const auto& a = r.primary().access;
      std::cout << "reachability delta " << a.reachability_rate << ", mean_T delta "
                << (a.mean_travel_time_s ? std::to_string(*a.mean_travel_time_s) : std::string("n/a")) << "\n";
    } else if (*layer) {
      const auto cities = data::load_corpus(data_dir);
      const auto& city = pick_city(cities, city_id);
      auto l = pipeline::build_layer(cfg, city, year.value_or(pipeline::latest_year(city)), pipeline::utc_timestamp());
      l.version = 1;
      write_text(out, service::risk_layer_to_json(l).dump(2) + "\n");
      std::cout << "wrote " << l.weights.entries.size() << " edges, " << l.zones.size() << " zones\n";
    } else if (*serve) {
      auto cities = data::load_corpus(data_dir);
      auto city = std::make_shared<const data::SyntheticCity>(pick_city(cities, city_id));
      const int y = year.value_or(pipeline::latest_year(*city));
      std::shared_ptr<const diffusion::Forecaster> forecaster;
      if (!model_path.empty()) {
        forecaster = std::make_shared<const diffusion::Forecaster>(diffusion::Forecaster::load(model_path));
      }
      const double cadence = cadence_s > 0.0 ? cadence_s : cfg.service.cadence_s;
      auto build = [&cfg, city, y, cadence] {
        auto c = cfg;
        c.service.cadence_s = cadence;
        return pipeline::build_layer(c, *city, y, pipeline::utc_timestamp());
      };
      service::LayerStore store;
      store.publish(build());
      service::ScenarioServiceConfig sc;
      sc.policy = cfg.policy;
      sc.time_budget_s = cfg.time_budget_s;
      sc.max_risk_buildings = cfg.scenario.max_risk_buildings;
      sc.ensemble_spread = cfg.scenario.ensemble_spread;
      service::ScenarioService scenarios(city, forecaster, &store, sc);
      service::LayerRefresher refresher(
          store, build, std::chrono::milliseconds(static_cast<long long>(cadence * 1000.0)),
          [](const std::string& msg) { std::cerr << "warning: layer refresh failed: " << one_line(msg) << "\n"; });
      service::HttpServer server(store, &scenarios);
      const int bound = server.bind(host.empty() ? cfg.service.host : host, port >= 0 ? port : cfg.service.port);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.start();
      refresher.start();
      std::cout << "listening on " << (host.empty() ? cfg.service.host : host) << ":" << bound << std::endl;
      const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(duration_s);
      while (!g_stop && (duration_s <= 0.0 || std::chrono::steady_clock::now() < until)) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
      refresher.stop();
      server.stop();
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << error_kind(e) << ": " << one_line(e.what()) << "\n";
    return 1;
  }
}
