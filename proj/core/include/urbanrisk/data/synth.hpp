#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "urbanrisk/data/records.hpp"
#include "urbanrisk/graph/network.hpp"

namespace urbanrisk::data {

/// Non-label city metadata. This is the only city information prompts may use
/// for a held-out city.
struct CityProfile {
  std::string climate_zone = "temperate_maritime";
  std::string flood_intensity = "medium";   // low | medium | high
  std::string flood_duration = "flash";     // flash | sustained
  std::string flood_source = "pluvial";     // coastal | riverine | pluvial
  std::string heat_magnitude = "moderate";  // moderate | severe | extreme
  std::string heat_duration = "days";       // days | weeks
  std::string age_cohort = "1950-1990";     // pre-1950 | 1950-1990 | post-1990
  std::string materials = "masonry";        // masonry | concrete | wood
  int income_level = 3;                     // quintile 1..5
  double population_density = 4000.0;      // people per km^2
  double homeownership_rate = 0.5;
  std::string climate_scenario = "RCP4.5";  // RCP4.5 | RCP8.5
  std::string seasonal_factor = "winter_precipitation";
};

struct SynthConfig {
  std::string city_id = "cph";
  geo::LatLon center{55.676, 12.568};
  int n_buildings = 1000;
  int start_year = 2011;
  int n_years = 15;
  double extent_km = 5.0;
  double node_spacing_m = 350.0;
  double edge_drop_fraction = 0.08;
  int arterial_every = 4;
  double flood_events_per_year = 56.0;
  double heat_events_per_year = 27.0;
  int n_hospitals = 2;
  int n_fire_stations = 3;
  int n_shelters = 4;
  double time_budget_s = 900.0;
  graph::HazardPolicy policy;
  CityProfile profile;

  // Throws ConfigError for unusable settings, including requests that cannot
  // produce a connected network.
  void validate() const;
};

struct HazardEvent {
  std::string id;
  std::string kind;  // "flood" | "heat"
  int year = 0;
  int day_of_year = 1;
  double lat = 0.0;
  double lon = 0.0;
  double radius_m = 0.0;
  double intensity = 0.0;
};

struct SyntheticCity {
  CityDataset dataset;
  std::shared_ptr<const graph::RoadNetwork> network;
  graph::ServicePoints services;
  std::vector<graph::HazardScenario> scenarios;  // one per year: "<city>-Y<year>"
  std::vector<HazardEvent> events;
  CityProfile profile;
  geo::LatLon center;
};

/// Deterministic synthetic city: buildings with all six feature groups over
/// n_years, a connected road network with service points, and labeled hazard
/// events. Low elevation, high imperviousness and weak drainage plant higher
/// flood depths so the learning signal is testable.
SyntheticCity synthesize_city(const SynthConfig& config, std::uint64_t seed);

std::string scenario_id_for_year(const std::string& city_id, int year);

/// Perturbed copies of a scenario (depths scaled by a seeded factor in
/// [1 - spread, 1 + spread]); member 0 is the base scenario itself.
std::vector<graph::HazardScenario> scenario_ensemble(const graph::HazardScenario& base, int n,
                                                     std::uint64_t seed, double spread = 0.25);

}  // namespace urbanrisk::data
