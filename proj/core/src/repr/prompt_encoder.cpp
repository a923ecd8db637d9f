#include "urbanrisk/repr/prompt_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/random.hpp"
#include "urbanrisk/repr/attention.hpp"

namespace urbanrisk::repr {

using nlohmann::json;

namespace {

using Choices = std::vector<std::string_view>;

const Choices kIntensity = {"low", "medium", "high"};
const Choices kFloodDuration = {"flash", "sustained"};
const Choices kSource = {"coastal", "riverine", "pluvial"};
const Choices kMagnitude = {"moderate", "severe", "extreme"};
const Choices kHeatDuration = {"days", "weeks"};
const Choices kAgeCohort = {"pre-1950", "1950-1990", "post-1990"};
const Choices kMaterials = {"masonry", "concrete", "wood"};
const Choices kClimate = {"RCP4.5", "RCP8.5"};
const Choices kSeasonal = {"winter_precipitation", "summer_heat_waves"};

std::size_t choice_index(const std::string& value, const Choices& valid, const char* field) {
  auto it = std::find(valid.begin(), valid.end(), value);
  if (it == valid.end()) {
    std::ostringstream msg;
    msg << field << ": unknown value '" << value << "'; valid values:";
    for (auto v : valid) msg << ' ' << v;
    throw ArgumentError(msg.str());
  }
  return static_cast<std::size_t>(it - valid.begin());
}

void check_unit(double v, const char* field) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ArgumentError(std::string(field) + " must be within [0, 1]");
  }
}

struct Categorical {
  const Choices* valid;
  std::size_t index;
};

std::vector<Categorical> categoricals(int level, const PromptFields& f) {
  const auto& l1 = f.level1;
  const auto& l3 = f.level3;
  switch (level) {
    case 1:
      return {{&kIntensity, choice_index(l1.flood_intensity, kIntensity, "level1.flood.intensity")},
              {&kFloodDuration,
               choice_index(l1.flood_duration, kFloodDuration, "level1.flood.duration")},
              {&kSource, choice_index(l1.flood_source, kSource, "level1.flood.source")},
              {&kMagnitude, choice_index(l1.heat_magnitude, kMagnitude, "level1.heat.magnitude")},
              {&kHeatDuration,
               choice_index(l1.heat_duration, kHeatDuration, "level1.heat.duration")},
              {&kAgeCohort,
               choice_index(l1.age_cohort, kAgeCohort, "level1.structural.age_cohort")},
              {&kMaterials, choice_index(l1.materials, kMaterials, "level1.structural.materials")}};
    case 2:
      return {};
    default:
      return {{&kClimate, choice_index(l3.climate_scenario, kClimate, "level3.climate_scenario")},
              {&kSeasonal, choice_index(l3.seasonal_factor, kSeasonal, "level3.seasonal_factor")}};
  }
}

// Numeric channels, each scaled to roughly [-1, 1].
std::vector<double> numerics(int level, const PromptFields& f) {
  const auto& l2 = f.level2;
  switch (level) {
    case 1:
      return {2.0 * f.level1.urban_heat_island - 1.0};
    case 2:
      return {(l2.income_level - 3) / 2.0,
              std::log1p(l2.population_density / 1000.0) / 3.0 - 1.0,
              2.0 * l2.homeownership_rate - 1.0,
              2.0 * l2.emergency_services - 1.0,
              2.0 * l2.evacuation_routes - 1.0,
              2.0 * l2.public_transit - 1.0,
              2.0 * l2.hospitals - 1.0,
              2.0 * l2.shelters - 1.0};
    default:
      return {(f.level3.forecast_horizon - 5.5) / 4.5};
  }
}

}  // namespace

void PromptFields::validate() const {
  for (int level = 1; level <= 3; ++level) categoricals(level, *this);
  check_unit(level1.urban_heat_island, "level1.heat.urban_heat_island");
  if (level2.income_level < 1 || level2.income_level > 5) {
    throw ArgumentError("level2.income_level must be a quintile in [1, 5]");
  }
  if (!(level2.population_density >= 0.0) || !std::isfinite(level2.population_density)) {
    throw ArgumentError("level2.population_density must be finite and >= 0");
  }
  check_unit(level2.homeownership_rate, "level2.homeownership_rate");
  check_unit(level2.emergency_services, "level2.transportation_accessibility.emergency_services");
  check_unit(level2.evacuation_routes, "level2.transportation_accessibility.evacuation_routes");
  check_unit(level2.public_transit, "level2.transportation_accessibility.public_transit");
  check_unit(level2.hospitals, "level2.service_access.hospitals");
  check_unit(level2.shelters, "level2.service_access.shelters");
  if (level3.forecast_horizon < 1 || level3.forecast_horizon > 10) {
    throw ArgumentError("level3.forecast_horizon must be within [1, 10] years");
  }
}

json prompt_fields_to_json(const PromptFields& f) {
  const auto& l1 = f.level1;
  const auto& l2 = f.level2;
  const auto& l3 = f.level3;
  return {
      {"level1",
       {{"flood",
         {{"intensity", l1.flood_intensity}, {"duration", l1.flood_duration}, {"source", l1.flood_source}}},
        {"heat",
         {{"magnitude", l1.heat_magnitude},
          {"duration", l1.heat_duration},
          {"urban_heat_island", l1.urban_heat_island}}},
        {"structural", {{"age_cohort", l1.age_cohort}, {"materials", l1.materials}}}}},
      {"level2",
       {{"income_level", l2.income_level},
        {"population_density", l2.population_density},
        {"homeownership_rate", l2.homeownership_rate},
        {"transportation_accessibility",
         {{"emergency_services", l2.emergency_services},
          {"evacuation_routes", l2.evacuation_routes},
          {"public_transit", l2.public_transit}}},
        {"service_access", {{"hospitals", l2.hospitals}, {"shelters", l2.shelters}}}}},
      {"level3",
       {{"forecast_horizon", l3.forecast_horizon},
        {"climate_scenario", l3.climate_scenario},
        {"seasonal_factor", l3.seasonal_factor}}}};
}

PromptFields prompt_fields_from_json(const json& j) {
  PromptFields f;
  try {
    const auto& l1 = j.at("level1");
    f.level1.flood_intensity = l1.at("flood").at("intensity").get<std::string>();
    f.level1.flood_duration = l1.at("flood").at("duration").get<std::string>();
    f.level1.flood_source = l1.at("flood").at("source").get<std::string>();
    f.level1.heat_magnitude = l1.at("heat").at("magnitude").get<std::string>();
    f.level1.heat_duration = l1.at("heat").at("duration").get<std::string>();
    f.level1.urban_heat_island = l1.at("heat").value("urban_heat_island", f.level1.urban_heat_island);
    f.level1.age_cohort = l1.at("structural").at("age_cohort").get<std::string>();
    f.level1.materials = l1.at("structural").at("materials").get<std::string>();
    const auto& l2 = j.at("level2");
    f.level2.income_level = l2.at("income_level").get<int>();
    f.level2.population_density = l2.at("population_density").get<double>();
    f.level2.homeownership_rate = l2.at("homeownership_rate").get<double>();
    if (l2.contains("transportation_accessibility")) {
      const auto& t = l2["transportation_accessibility"];
      f.level2.emergency_services = t.value("emergency_services", f.level2.emergency_services);
      f.level2.evacuation_routes = t.value("evacuation_routes", f.level2.evacuation_routes);
      f.level2.public_transit = t.value("public_transit", f.level2.public_transit);
    }
    if (l2.contains("service_access")) {
      f.level2.hospitals = l2["service_access"].value("hospitals", f.level2.hospitals);
      f.level2.shelters = l2["service_access"].value("shelters", f.level2.shelters);
    }
    const auto& l3 = j.at("level3");
    f.level3.forecast_horizon = l3.at("forecast_horizon").get<int>();
    f.level3.climate_scenario = l3.at("climate_scenario").get<std::string>();
    f.level3.seasonal_factor = l3.at("seasonal_factor").get<std::string>();
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("malformed prompt template: ") + e.what());
  }
  f.validate();
  return f;
}

PromptEncoder::PromptEncoder(int dim, std::uint64_t seed, int level_width) : dim_(dim) {
  if (dim < 3) throw ArgumentError("prompt embedding dim must be >= 3");
  width_ = level_width > 0 ? level_width : std::max(8, dim / 3);
  const PromptFields defaults;
  int begin = 0;
  for (int l = 0; l < 3; ++l) {
    auto& lv = levels_[static_cast<std::size_t>(l)];
    const std::uint64_t ls = derive_seed(seed, static_cast<std::uint64_t>(l + 1));
    const auto cats = categoricals(l + 1, defaults);
    for (std::size_t c = 0; c < cats.size(); ++c) {
      std::vector<Eigen::VectorXd> rows;
      for (std::size_t v = 0; v < cats[c].valid->size(); ++v) {
        rows.push_back(seeded_matrix(width_, 1, derive_seed(ls, 1000 * (c + 1) + v)).col(0));
      }
      lv.lookups.push_back(std::move(rows));
    }
    const auto nums = numerics(l + 1, defaults);
    for (std::size_t c = 0; c < nums.size(); ++c) {
      lv.numeric.push_back(seeded_matrix(width_, 1, derive_seed(ls, 50000 + c)).col(0));
    }
    const int block = dim / 3 + (l < dim % 3 ? 1 : 0);
    lv.projection = seeded_matrix(block, width_, derive_seed(ls, 99999));
    lv.begin = begin;
    begin += block;
  }
}

std::pair<int, int> PromptEncoder::level_channels(int level) const {
  if (level < 1 || level > 3) throw ArgumentError("prompt levels are 1, 2 and 3");
  const auto& lv = levels_[static_cast<std::size_t>(level - 1)];
  return {lv.begin, lv.begin + static_cast<int>(lv.projection.rows())};
}

Eigen::VectorXd PromptEncoder::level_input(int level, const PromptFields& f) const {
  const auto& lv = levels_[static_cast<std::size_t>(level - 1)];
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(width_);
  const auto cats = categoricals(level, f);
  for (std::size_t c = 0; c < cats.size(); ++c) sum += lv.lookups[c][cats[c].index];
  const auto nums = numerics(level, f);
  for (std::size_t c = 0; c < nums.size(); ++c) sum += nums[c] * lv.numeric[c];
  return sum;
}

Eigen::VectorXd PromptEncoder::encode(const PromptFields& f) const {
  f.validate();
  Eigen::VectorXd out(dim_);
  for (int l = 1; l <= 3; ++l) {
    const auto& lv = levels_[static_cast<std::size_t>(l - 1)];
    out.segment(lv.begin, lv.projection.rows()) =
        (lv.projection * level_input(l, f)).array().tanh().matrix();
  }
  return out;
}

}  // namespace urbanrisk::repr
