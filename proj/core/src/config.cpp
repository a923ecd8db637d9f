#include "urbanrisk/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "urbanrisk/errors.hpp"

namespace urbanrisk {

namespace {

// Reads one TOML table, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Reader {
 public:
  Reader(const toml::table& t, std::string path) : t_(t), path_(std::move(path)) {}

  template <typename T>
  void get(std::string_view key, T& out) {
    const toml::node* n = find(key);
    if (!n) return;
    if constexpr (std::is_same_v<T, bool>) {
      auto v = n->value<bool>();
      if (!v || !n->is_boolean()) fail(key, "expected a boolean");
      out = *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!n->is_string()) fail(key, "expected a string");
      out = *n->value<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!n->is_number()) fail(key, "expected a number");
      out = static_cast<T>(*n->value<double>());
    } else if constexpr (std::is_integral_v<T>) {
      if (!n->is_integer()) fail(key, "expected an integer");
      const auto v = *n->value<std::int64_t>();
      if constexpr (std::is_unsigned_v<T>) {
        if (v < 0) fail(key, "must be non-negative");
      }
      out = static_cast<T>(v);
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      const auto* a = n->as_array();
      if (!a) fail(key, "expected an array of numbers");
      out.clear();
      for (const auto& e : *a) {
        if (!e.is_number()) fail(key, "expected an array of numbers");
        out.push_back(*e.value<double>());
      }
    }
  }

  std::optional<Reader> table(std::string_view key) {
    const toml::node* n = find(key);
    if (!n) return std::nullopt;
    if (!n->is_table()) fail(key, "expected a table");
    return Reader(*n->as_table(), child(key));
  }

  std::vector<Reader> tables(std::string_view key) {
    std::vector<Reader> out;
    const toml::node* n = find(key);
    if (!n) return out;
    const auto* a = n->as_array();
    if (!a) fail(key, "expected an array of tables");
    for (std::size_t i = 0; i < a->size(); ++i) {
      const auto* t = (*a)[i].as_table();
      if (!t) fail(key, "expected an array of tables");
      out.emplace_back(*t, child(key) + "[" + std::to_string(i) + "]");
    }
    return out;
  }

  void finish() const {
    for (const auto& [k, v] : t_) {
      if (!used_.count(std::string(k.str()))) {
        throw ConfigError("unknown config key " + child(k.str()));
      }
    }
  }

  [[noreturn]] void fail(std::string_view key, const std::string& msg) const {
    throw ConfigError(child(key) + ": " + msg);
  }

 private:
  const toml::node* find(std::string_view key) {
    used_.insert(std::string(key));
    return t_.get(key);
  }
  std::string child(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const toml::table& t_;
  std::string path_;
  std::set<std::string> used_;
};

void read_profile(Reader& r, data::CityProfile& p) {
  r.get("climate_zone", p.climate_zone);
  r.get("flood_intensity", p.flood_intensity);
  r.get("flood_duration", p.flood_duration);
  r.get("flood_source", p.flood_source);
  r.get("heat_magnitude", p.heat_magnitude);
  r.get("heat_duration", p.heat_duration);
  r.get("age_cohort", p.age_cohort);
  r.get("materials", p.materials);
  r.get("income_level", p.income_level);
  r.get("population_density", p.population_density);
  r.get("homeownership_rate", p.homeownership_rate);
  r.get("climate_scenario", p.climate_scenario);
  r.get("seasonal_factor", p.seasonal_factor);
  r.finish();
}

data::SynthConfig read_city(Reader& r) {
  data::SynthConfig c;
  r.get("id", c.city_id);
  r.get("lat", c.center.lat);
  r.get("lon", c.center.lon);
  r.get("buildings", c.n_buildings);
  r.get("start_year", c.start_year);
  r.get("years", c.n_years);
  r.get("extent_km", c.extent_km);
  r.get("node_spacing_m", c.node_spacing_m);
  r.get("edge_drop_fraction", c.edge_drop_fraction);
  r.get("arterial_every", c.arterial_every);
  r.get("flood_events_per_year", c.flood_events_per_year);
  r.get("heat_events_per_year", c.heat_events_per_year);
  r.get("hospitals", c.n_hospitals);
  r.get("fire_stations", c.n_fire_stations);
  r.get("shelters", c.n_shelters);
  if (auto p = r.table("profile")) read_profile(*p, c.profile);
  r.finish();
  return c;
}

}  // namespace

PipelineConfig default_config() {
  PipelineConfig c;
  c.train.stages = {diffusion::StageConfig{1, 24, 1e-3, 0}, diffusion::StageConfig{2, 6, 3e-4, -1}};
  c.eval.q = 10.0;
  return c;
}

void PipelineConfig::validate() const {
  if (cities.empty()) throw ConfigError("at least one [[city]] is required");
  std::set<std::string> ids;
  for (const auto& c : cities) {
    c.validate();
    if (!ids.insert(c.city_id).second) throw ConfigError("duplicate city id " + c.city_id);
  }
  try {
    policy.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("hazard: ") + e.what());
  }
  if (!(time_budget_s > 0.0)) throw ConfigError("time_budget_s must be positive");
  if (split.bounds.val_end <= split.bounds.train_end) throw ConfigError("split.val_end must exceed split.train_end");
  if (!(split.cell_km > 0.0)) throw ConfigError("split.cell_km must be positive");
  if (!(split.test_frac > 0.0 && split.test_frac < 1.0)) throw ConfigError("split.test_frac must be in (0, 1)");
  if (split.regime == eval::SplitRegime::kUnseenCity && !ids.count(split.held_out_city)) {
    throw ConfigError("split.held_out_city must name a configured city");
  }
  model.validate();
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (train.stages.empty()) throw ConfigError("at least one [[train.stage]] is required");
  for (const auto& s : train.stages) {
    if (s.epochs < 0 || !(s.learning_rate > 0.0)) throw ConfigError("train.stage needs epochs >= 0 and learning_rate > 0");
  }
  try {
    train.weights.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("train.loss: ") + e.what());
  }
  if (eval.q && !(*eval.q > 0.0 && *eval.q < 100.0)) throw ConfigError("eval.q must be a percentage in (0, 100)");
  if (eval.flood_class_edges.empty() ||
      !std::is_sorted(eval.flood_class_edges.begin(), eval.flood_class_edges.end())) {
    throw ConfigError("eval.flood_class_edges must be a non-empty ascending list");
  }
  if (eval.samples < 2) throw ConfigError("eval.samples must be >= 2");
  if (scenario.samples < 2) throw ConfigError("scenario.samples must be >= 2");
  if (scenario.horizon < 1 || scenario.horizon > 10) throw ConfigError("scenario.horizon must be within [1, 10]");
  if (scenario.ensemble_members < 1) throw ConfigError("scenario.ensemble_members must be >= 1");
  if (service.port < 0 || service.port > 65535) throw ConfigError("service.port out of range");
  if (!(service.cadence_s > 0.0)) throw ConfigError("service.cadence_s must be positive");
  if (!(service.zone_km > 0.0)) throw ConfigError("service.zone_km must be positive");
}

PipelineConfig parse_config(std::string_view text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  PipelineConfig c = default_config();
  Reader r(root, "");
  r.get("time_budget_s", c.time_budget_s);
  if (auto cities = r.tables("city"); !cities.empty()) {
    c.cities.clear();
    for (auto& t : cities) c.cities.push_back(read_city(t));
  }
  if (auto h = r.table("hazard")) {
    h->get("policy_id", c.policy.id);
    h->get("depth_free_m", c.policy.depth_free_m);
    h->get("depth_impassable_m", c.policy.depth_impassable_m);
    h->get("inflation_per_m", c.policy.inflation_per_m);
    h->finish();
  }
  if (auto s = r.table("split")) {
    std::string regime(eval::regime_name(c.split.regime));
    s->get("regime", regime);
    const auto parsed = eval::parse_regime(regime);
    if (!parsed) s->fail("regime", "must be temporal, spatial_block or unseen_city");
    c.split.regime = *parsed;
    s->get("train_end", c.split.bounds.train_end);
    s->get("val_end", c.split.bounds.val_end);
    s->get("cell_km", c.split.cell_km);
    s->get("test_frac", c.split.test_frac);
    s->get("held_out_city", c.split.held_out_city);
    s->finish();
  }
  if (auto m = r.table("model")) {
    auto& mc = c.model;
    if (auto d = m->table("dims")) {
      d->get("img", mc.dims.img);
      d->get("tab", mc.dims.tab);
      d->get("graph", mc.dims.graph);
      d->get("ts", mc.dims.ts);
      d->get("attn_out", mc.dims.attn_out);
      d->finish();
    }
    m->get("token_dim", mc.token_dim);
    m->get("clusters", mc.clusters);
    m->get("prompt_dim", mc.prompt_dim);
    m->get("time_dim", mc.time_dim);
    m->get("hidden", mc.hidden);
    m->get("blocks", mc.blocks);
    m->get("schedule_steps", mc.schedule_steps);
    m->get("beta_min", mc.beta_min);
    m->get("beta_max", mc.beta_max);
    m->get("sampler_steps", mc.sampler_steps);
    double clip = mc.clip_x0.value_or(0.0);
    m->get("clip_x0", clip);
    mc.clip_x0 = clip > 0.0 ? std::optional<double>(clip) : std::nullopt;
    m->get("modality_dropout", mc.modality_dropout);
    m->finish();
  }
  if (auto t = r.table("train")) {
    auto& tc = c.train;
    t->get("batch_size", tc.batch_size);
    t->get("weight_decay", tc.weight_decay);
    t->get("grad_clip", tc.grad_clip);
    t->get("probe_size", tc.probe_size);
    if (auto l = t->table("loss")) {
      l->get("diff", tc.weights.diff);
      l->get("flood", tc.weights.flood);
      l->get("heat", tc.weights.heat);
      l->get("structure", tc.weights.structure);
      l->get("transport", tc.weights.transport);
      l->finish();
    }
    if (auto stages = t->tables("stage"); !stages.empty()) {
      tc.stages.clear();
      for (auto& st : stages) {
        diffusion::StageConfig sc;
        sc.stage = static_cast<int>(tc.stages.size()) + 1;
        st.get("epochs", sc.epochs);
        st.get("learning_rate", sc.learning_rate);
        st.get("freeze_groups", sc.freeze_groups);
        st.finish();
        tc.stages.push_back(sc);
      }
    }
    t->finish();
  }
  if (auto e = r.table("eval")) {
    double q = c.eval.q.value_or(-1.0);
    e->get("q", q);
    c.eval.q = q >= 0.0 ? std::optional<double>(q) : std::nullopt;
    e->get("flood_class_edges", c.eval.flood_class_edges);
    e->get("max_pairs", c.eval.max_pairs);
    e->get("samples", c.eval.samples);
    e->finish();
  }
  if (auto s = r.table("scenario")) {
    s->get("horizon", c.scenario.horizon);
    s->get("samples", c.scenario.samples);
    s->get("sensitivity", c.scenario.sensitivity);
    s->get("ensemble_members", c.scenario.ensemble_members);
    s->get("ensemble_spread", c.scenario.ensemble_spread);
    s->get("max_risk_buildings", c.scenario.max_risk_buildings);
    s->finish();
  }
  if (auto s = r.table("service")) {
    s->get("host", c.service.host);
    s->get("port", c.service.port);
    s->get("cadence_s", c.service.cadence_s);
    s->get("zone_km", c.service.zone_km);
    s->finish();
  }
  r.finish();
  for (auto& city : c.cities) {
    city.policy = c.policy;
    city.time_budget_s = c.time_budget_s;
  }
  c.model.time_budget_s = c.time_budget_s;
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

}  // namespace urbanrisk
