#include "urbanrisk/diffusion/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "urbanrisk/data/io.hpp"
#include "urbanrisk/data/normalize.hpp"
#include "urbanrisk/errors.hpp"
#include "urbanrisk/graph/routing.hpp"
#include "urbanrisk/random.hpp"

namespace urbanrisk::diffusion {

using Eigen::Index;
using Eigen::MatrixXd;
using nlohmann::json;

void ForecasterConfig::validate() const {
  try {
    dims.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  if (token_dim < 1 || clusters < 1 || prompt_dim < 3 || time_dim < 1 || hidden < 1 || blocks < 0) {
    throw ConfigError("forecaster dimensions must be positive (prompt_dim >= 3)");
  }
  if (schedule_steps < 2 || !(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0)) {
    throw ConfigError("invalid noise schedule settings");
  }
  if (sampler_steps < 1 || sampler_steps > schedule_steps) {
    throw ConfigError("sampler steps must be within [1, schedule steps]");
  }
  if (clip_x0 && !(*clip_x0 > 0.0)) throw ConfigError("clip_x0 must be positive");
  if (!(modality_dropout >= 0.0 && modality_dropout <= 1.0)) {
    throw ConfigError("modality dropout must be within [0, 1]");
  }
  if (!(time_budget_s > 0.0)) throw ConfigError("time budget must be positive");
}

json forecaster_config_to_json(const ForecasterConfig& c) {
  json j = {{"dims", repr::dims_to_json(c.dims)},
            {"token_dim", c.token_dim},
            {"clusters", c.clusters},
            {"prompt_dim", c.prompt_dim},
            {"time_dim", c.time_dim},
            {"hidden", c.hidden},
            {"blocks", c.blocks},
            {"schedule_steps", c.schedule_steps},
            {"beta_min", c.beta_min},
            {"beta_max", c.beta_max},
            {"sampler_steps", c.sampler_steps},
            {"modality_dropout", c.modality_dropout},
            {"time_budget_s", c.time_budget_s}};
  j["clip_x0"] = c.clip_x0 ? json(*c.clip_x0) : json(nullptr);
  return j;
}

ForecasterConfig forecaster_config_from_json(const json& j) {
  ForecasterConfig c;
  c.dims = repr::dims_from_json(j.at("dims"));
  c.token_dim = j.at("token_dim").get<int>();
  c.clusters = j.at("clusters").get<int>();
  c.prompt_dim = j.at("prompt_dim").get<int>();
  c.time_dim = j.at("time_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.blocks = j.at("blocks").get<int>();
  c.schedule_steps = j.at("schedule_steps").get<int>();
  c.beta_min = j.at("beta_min").get<double>();
  c.beta_max = j.at("beta_max").get<double>();
  c.sampler_steps = j.at("sampler_steps").get<int>();
  c.modality_dropout = j.at("modality_dropout").get<double>();
  c.time_budget_s = j.at("time_budget_s").get<double>();
  if (j.contains("clip_x0") && !j["clip_x0"].is_null()) c.clip_x0 = j["clip_x0"].get<double>();
  else c.clip_x0.reset();
  c.validate();
  return c;
}

Snapshot make_snapshot(const data::SyntheticCity& city, int year, const graph::HazardPolicy& policy) {
  Snapshot s;
  s.city = &city;
  s.year = year;
  for (const auto& r : city.dataset.records) {
    if (r.year == year) s.records.push_back(r);
  }
  if (s.records.empty()) {
    throw ArgumentError("city " + city.dataset.city_id + " has no records for year " +
                        std::to_string(year));
  }
  const auto id = data::scenario_id_for_year(city.dataset.city_id, year);
  auto it = std::find_if(city.scenarios.begin(), city.scenarios.end(),
                         [&](const graph::HazardScenario& h) { return h.id == id; });
  s.network = std::make_shared<const graph::ConditionedNetwork>(
      it == city.scenarios.end() ? graph::ConditionedNetwork::free_flow(city.network)
                                 : graph::condition_network(city.network, *it, policy));
  return s;
}

Snapshot with_network(const Snapshot& s, graph::ConditionedNetwork network) {
  Snapshot out{s.city, s.year, s.records, nullptr};
  out.network = std::make_shared<const graph::ConditionedNetwork>(std::move(network));
  return out;
}

std::vector<ForecastPair> forecast_pairs(const data::CityDataset& dataset) {
  std::map<std::string, std::map<int, std::size_t>, std::less<>> index;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    index[r.building_id][r.year] = i;
  }
  std::vector<ForecastPair> out;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    const auto& years = index[r.building_id];
    for (int h : dataset.horizons) {
      auto it = years.find(r.year + h);
      if (it != years.end()) out.push_back({i, it->second, h});
    }
  }
  return out;
}

std::uint64_t building_seed(std::uint64_t seed, const std::string& building_id) {
  return derive_seed(seed, stable_hash(building_id));
}

std::vector<graph::NodeIndex> record_nodes(const graph::RoadNetwork& net,
                                           std::span<const data::BuildingRecord> records) {
  std::vector<graph::NodeIndex> nodes;
  nodes.reserve(records.size());
  for (const auto& r : records) {
    auto idx = r.node_attachment.empty() ? std::nullopt : net.find_node(r.node_attachment);
    nodes.push_back(idx ? *idx : net.nearest_node(r.position()));
  }
  return nodes;
}

Forecaster::Forecaster(const ForecasterConfig& config, std::uint64_t seed)
    : config_((config.validate(), config)),
      seed_(seed),
      schedule_(build_schedule(config.schedule_steps, config.beta_min, config.beta_max)),
      encoders_(config.dims, derive_seed(seed, 1)),
      fusion_(config.dims, derive_seed(seed, 2)),
      token_mlp_(config.dims.fused(), config.token_dim, derive_seed(seed, 3)),
      prompt_encoder_(config.prompt_dim, derive_seed(seed, 4)),
      denoiser_(DenoiserConfig{static_cast<int>(data::TargetVector::kSize), config.cond_dim(),
                               config.time_dim, config.hidden, config.blocks},
                derive_seed(seed, 5)) {}

const data::NormalizationStats& Forecaster::normalization() const {
  ensure_normalized();
  return *normalization_;
}

void Forecaster::ensure_normalized() const {
  if (!normalization_) throw StateError("forecaster has no normalization statistics; call fit first");
}

data::BuildingRecord Forecaster::normalized(const data::BuildingRecord& r) const {
  std::vector<data::BuildingRecord> one{r};
  data::apply_normalization(one, *normalization_);
  return std::move(one.front());
}

repr::PromptFields Forecaster::prompt_fields(const data::CityProfile& p,
                                             const graph::AccessibilitySummary& access,
                                             int horizon) const {
  repr::PromptFields f;
  f.level1.flood_intensity = p.flood_intensity;
  f.level1.flood_duration = p.flood_duration;
  f.level1.flood_source = p.flood_source;
  f.level1.heat_magnitude = p.heat_magnitude;
  f.level1.heat_duration = p.heat_duration;
  f.level1.age_cohort = p.age_cohort;
  f.level1.materials = p.materials;
  f.level2.income_level = p.income_level;
  f.level2.population_density = p.population_density;
  f.level2.homeownership_rate = p.homeownership_rate;
  const double tau = config_.time_budget_s;
  f.level2.emergency_services = access.reachability_rate;
  f.level2.evacuation_routes = std::min(access.mean_redundancy, 4.0) / 4.0;
  f.level2.hospitals =
      access.mean_travel_time_s ? 1.0 - std::min(*access.mean_travel_time_s, 3.0 * tau) / (3.0 * tau) : 0.0;
  f.level2.shelters = std::min(access.mean_redundancy, 2.0) / 2.0;
  f.level3.forecast_horizon = horizon;
  f.level3.climate_scenario = p.climate_scenario;
  f.level3.seasonal_factor = p.seasonal_factor;
  return f;
}

Forecaster::SnapshotParts Forecaster::snapshot_parts(const Snapshot& s) const {
  ensure_normalized();
  if (!s.city || !s.network) throw ArgumentError("snapshot needs a city and a network");
  const auto n = static_cast<Index>(s.records.size());
  if (n == 0) throw ArgumentError("snapshot has no records");
  const auto& d = config_.dims;
  const int fused_dim = d.fused();
  const int k_targets = static_cast<int>(data::TargetVector::kSize);

  SnapshotParts parts;
  parts.base.resize(fused_dim + config_.token_dim + k_targets + kGraphSummaryDim, n);
  MatrixXd fused(n, fused_dim);
  std::vector<geo::LatLon> positions;
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) {
    const auto& r = s.records[static_cast<std::size_t>(i)];
    const auto nr = normalized(r);
    parts.modalities.push_back(encoders_.encode(nr));
    fused.row(i) = fusion_.fuse(parts.modalities.back()).transpose();
    positions.push_back(r.position());
    ids.push_back(r.id);
    const auto y = r.targets.to_array();
    for (int k = 0; k < k_targets; ++k) {
      parts.base(fused_dim + config_.token_dim + k, i) =
          normalization_->targets[static_cast<std::size_t>(k)].apply(y[static_cast<std::size_t>(k)]);
    }
  }
  parts.base.topRows(fused_dim) = fused.transpose();

  const int k = std::min<int>(config_.clusters, static_cast<int>(n));
  const auto tokens = repr::cluster_tokens(
      positions, ids, fused, k, token_mlp_,
      derive_seed(seed_, stable_hash(s.city->dataset.city_id) ^ static_cast<std::uint64_t>(s.year)));
  for (Index i = 0; i < n; ++i) {
    parts.base.block(fused_dim, i, config_.token_dim, 1) =
        tokens.tokens[static_cast<std::size_t>(tokens.assignment[static_cast<std::size_t>(i)])].token;
  }

  const auto& net = s.network->base();
  const auto nodes = record_nodes(net, s.records);
  const auto emergency = s.city->services.emergency_nodes(net);
  const auto shelters = s.city->services.shelter_nodes(net);
  const double tau = config_.time_budget_s;
  const auto access = graph::accessibility_summary(*s.network, nodes, emergency, shelters, tau);
  parts.access = access.summary;

  std::vector<double> capped;
  for (const auto& a : access.per_building) capped.push_back(std::min(a.travel_time_s, 3.0 * tau) / tau);
  const double q25 = percentile(capped, 0.25), q50 = percentile(capped, 0.5),
               q75 = percentile(capped, 0.75);
  const int g0 = fused_dim + config_.token_dim + k_targets;
  for (Index i = 0; i < n; ++i) {
    const auto& a = access.per_building[static_cast<std::size_t>(i)];
    parts.base(g0 + 0, i) = net.degree(nodes[static_cast<std::size_t>(i)]) / 4.0;
    parts.base(g0 + 1, i) = capped[static_cast<std::size_t>(i)];
    parts.base(g0 + 2, i) = a.reachable ? 1.0 : 0.0;
    parts.base(g0 + 3, i) = std::min(a.redundancy, 4) / 4.0;
    parts.base(g0 + 4, i) = q25;
    parts.base(g0 + 5, i) = q50;
    parts.base(g0 + 6, i) = q75;
  }
  return parts;
}

MatrixXd Forecaster::conditioning(const Snapshot& s, int horizon) const {
  const int h[] = {horizon};
  return std::move(conditioning(s, h).front());
}

std::vector<MatrixXd> Forecaster::conditioning(const Snapshot& s, std::span<const int> horizons) const {
  const auto parts = snapshot_parts(s);
  std::vector<MatrixXd> out;
  for (int h : horizons) {
    const auto prompt = prompt_encoder_.encode(prompt_fields(s.city->profile, parts.access, h));
    MatrixXd cond(config_.cond_dim(), parts.base.cols());
    cond.topRows(parts.base.rows()) = parts.base;
    cond.bottomRows(config_.prompt_dim) = prompt.replicate(1, parts.base.cols());
    out.push_back(std::move(cond));
  }
  return out;
}

TrainHistory Forecaster::fit(std::span<const data::SyntheticCity> cities,
                             const data::PartitionMap& partitions, const TrainConfig& train,
                             const graph::HazardPolicy& policy) {
  std::vector<data::BuildingRecord> all;
  for (const auto& c : cities) all.insert(all.end(), c.dataset.records.begin(), c.dataset.records.end());
  normalization_ = data::fit_normalization(all, partitions);

  const auto k_targets = static_cast<Index>(data::TargetVector::kSize);
  std::vector<Eigen::VectorXd> x0_cols, cond_cols;
  std::vector<repr::ModalityEmbedding> modalities;

  for (const auto& city : cities) {
    const auto pairs = forecast_pairs(city.dataset);
    std::map<int, std::vector<ForecastPair>> by_year;
    for (const auto& p : pairs) {
      const auto& target = city.dataset.records[p.target];
      auto it = partitions.find(target.id);
      if (it == partitions.end()) throw ArgumentError("record " + target.id + " has no partition");
      if (it->second == data::Partition::kTrain) {
        by_year[city.dataset.records[p.source].year].push_back(p);
      }
    }
    for (const auto& [year, year_pairs] : by_year) {
      const auto snap = make_snapshot(city, year, policy);
      std::map<std::string, Index, std::less<>> local;
      for (std::size_t i = 0; i < snap.records.size(); ++i) local[snap.records[i].id] = static_cast<Index>(i);
      const auto parts = snapshot_parts(snap);
      std::map<int, Eigen::VectorXd> prompts;
      for (const auto& p : year_pairs) {
        auto& prompt = prompts[p.horizon];
        if (prompt.size() == 0) {
          prompt = prompt_encoder_.encode(prompt_fields(city.profile, parts.access, p.horizon));
        }
        const Index col = local.at(city.dataset.records[p.source].id);
        Eigen::VectorXd c(config_.cond_dim());
        c << parts.base.col(col), prompt;
        cond_cols.push_back(std::move(c));
        modalities.push_back(parts.modalities[static_cast<std::size_t>(col)]);
        const auto y = city.dataset.records[p.target].targets.to_array();
        Eigen::VectorXd x(k_targets);
        for (Index k = 0; k < k_targets; ++k) {
          x(k) = normalization_->targets[static_cast<std::size_t>(k)].apply(y[static_cast<std::size_t>(k)]);
        }
        x0_cols.push_back(std::move(x));
      }
    }
  }
  if (x0_cols.empty()) throw ArgumentError("no training pairs: no train record has an earlier observation");

  TrainingSet data;
  data.x0.resize(k_targets, static_cast<Index>(x0_cols.size()));
  data.cond.resize(config_.cond_dim(), static_cast<Index>(cond_cols.size()));
  for (std::size_t j = 0; j < x0_cols.size(); ++j) {
    data.x0.col(static_cast<Index>(j)) = x0_cols[j];
    data.cond.col(static_cast<Index>(j)) = cond_cols[j];
  }

  ConditioningHook hook;
  if (config_.modality_dropout > 0.0) {
    hook = [this, &modalities](int epoch, MatrixXd& cond) {
      const std::uint64_t es = derive_seed(seed_ ^ 0xd209ULL, static_cast<std::uint64_t>(epoch));
      for (Index j = 0; j < cond.cols(); ++j) {
        const auto me = repr::modality_dropout(modalities[static_cast<std::size_t>(j)],
                                               config_.modality_dropout,
                                               derive_seed(es, static_cast<std::uint64_t>(j)));
        if (me.masked != modalities[static_cast<std::size_t>(j)].masked) {
          cond.block(0, j, config_.dims.fused(), 1) = fusion_.fuse(me);
        }
      }
    };
  }
  denoiser_ = ResidualDenoiser(denoiser_.config(), derive_seed(seed_, 5));
  return train_denoiser(denoiser_, schedule_, data, train, hook);
}

std::vector<SampleSet> Forecaster::sample_conditioned(const MatrixXd& cond,
                                                      std::span<const std::uint64_t> seeds,
                                                      int n) const {
  if (!trained()) throw StateError("forecaster has not been trained");
  ensure_normalized();
  SamplerOptions opts;
  opts.steps = config_.sampler_steps;
  opts.clip_x0 = config_.clip_x0;
  auto sets = ensemble_sample_many(denoiser_, schedule_, cond, seeds, n, opts);
  for (auto& s : sets) {
    MatrixXd raw = s.samples;
    for (Index i = 0; i < raw.rows(); ++i) {
      std::array<double, data::TargetVector::kSize> y{};
      for (std::size_t k = 0; k < y.size(); ++k) {
        y[k] = normalization_->targets[k].invert(raw(i, static_cast<Index>(k)));
      }
      y[0] = std::max(0.0, y[0]);
      y[2] = std::clamp(y[2], 0.0, 100.0);
      y[3] = std::clamp(y[3], 0.0, 1.0);
      for (std::size_t k = 0; k < y.size(); ++k) raw(i, static_cast<Index>(k)) = y[k];
    }
    s = summarize_samples(std::move(raw));
  }
  return sets;
}

std::vector<SampleSet> Forecaster::sample(const Snapshot& s, int horizon,
                                          std::span<const std::size_t> which, int n,
                                          std::uint64_t seed) const {
  const MatrixXd cond = conditioning(s, horizon);
  MatrixXd picked(cond.rows(), static_cast<Index>(which.size()));
  std::vector<std::uint64_t> seeds;
  for (std::size_t j = 0; j < which.size(); ++j) {
    if (which[j] >= s.records.size()) throw ArgumentError("record index out of range");
    picked.col(static_cast<Index>(j)) = cond.col(static_cast<Index>(which[j]));
    seeds.push_back(building_seed(seed, s.records[which[j]].building_id));
  }
  return sample_conditioned(picked, seeds, n);
}

json Forecaster::to_json() const {
  ensure_normalized();
  return {{"schema_version", kCheckpointSchemaVersion},
          {"seed", seed_},
          {"config", forecaster_config_to_json(config_)},
          {"schedule", schedule_to_json(schedule_)},
          {"normalization", data::normalization_to_json(*normalization_)},
          {"denoiser", denoiser_.to_json()}};
}

Forecaster Forecaster::from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kCheckpointSchemaVersion) {
      throw FormatError("unsupported checkpoint schema_version");
    }
    Forecaster f(forecaster_config_from_json(j.at("config")), j.at("seed").get<std::uint64_t>());
    f.normalization_ = data::normalization_from_json(j.at("normalization"));
    auto d = ResidualDenoiser::from_json(j.at("denoiser"));
    if (!(d.config() == f.denoiser_.config())) throw FormatError("denoiser shape does not match config");
    f.denoiser_ = std::move(d);
    return f;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid checkpoint config: ") + e.what());
  }
}

void Forecaster::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << to_json().dump() << '\n';
}

Forecaster Forecaster::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace urbanrisk::diffusion
