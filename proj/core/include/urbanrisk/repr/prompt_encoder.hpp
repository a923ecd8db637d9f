#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace urbanrisk::repr {

// Level 1: hazard primitives.
struct HazardPrimitives {
  std::string flood_intensity = "medium";   // low | medium | high
  std::string flood_duration = "flash";     // flash | sustained
  std::string flood_source = "pluvial";     // coastal | riverine | pluvial
  std::string heat_magnitude = "moderate";  // moderate | severe | extreme
  std::string heat_duration = "days";       // days | weeks
  double urban_heat_island = 0.5;           // [0, 1]
  std::string age_cohort = "1950-1990";     // pre-1950 | 1950-1990 | post-1990
  std::string materials = "masonry";        // masonry | concrete | wood
  bool operator==(const HazardPrimitives&) const = default;
};

// Level 2: socio-economic and transportation context. Shares in [0, 1].
struct SocioTransportContext {
  int income_level = 3;              // quintile 1..5
  double population_density = 4000;  // people per km^2, >= 0
  double homeownership_rate = 0.5;
  double emergency_services = 0.5;
  double evacuation_routes = 0.5;
  double public_transit = 0.5;
  double hospitals = 0.5;
  double shelters = 0.5;
  bool operator==(const SocioTransportContext&) const = default;
};

// Level 3: temporal dynamics.
struct TemporalDynamics {
  int forecast_horizon = 1;                             // years, 1..10
  std::string climate_scenario = "RCP4.5";              // RCP4.5 | RCP8.5
  std::string seasonal_factor = "winter_precipitation";  // winter_precipitation | summer_heat_waves
  bool operator==(const TemporalDynamics&) const = default;
};

struct PromptFields {
  HazardPrimitives level1;
  SocioTransportContext level2;
  TemporalDynamics level3;
  // Throws ArgumentError naming the field and, for enums, the valid values.
  void validate() const;
  bool operator==(const PromptFields&) const = default;
};

/// JSON template: {"level1": {"flood": {...}, "heat": {...}, "structural": {...}},
/// "level2": {...}, "level3": {...}}.
nlohmann::json prompt_fields_to_json(const PromptFields& f);
PromptFields prompt_fields_from_json(const nlohmann::json& j);

/// Deterministic stand-in for the pretrained text encoder. Categorical fields
/// select seeded lookup rows, numeric fields scale seeded channels; rows are
/// summed per level and each level is projected into its own block of the
/// output, so a field only moves the channels of its level.
class PromptEncoder {
 public:
  PromptEncoder(int dim, std::uint64_t seed, int level_width = 0);
  int dim() const { return dim_; }
  // Output channel range [begin, end) fed by a level (1-based).
  std::pair<int, int> level_channels(int level) const;
  Eigen::VectorXd encode(const PromptFields& f) const;

 private:
  struct Level {
    std::vector<std::vector<Eigen::VectorXd>> lookups;  // per categorical field, per value
    std::vector<Eigen::VectorXd> numeric;               // per numeric channel
    Eigen::MatrixXd projection;                         // block rows x width
    int begin = 0;
  };
  int dim_;
  int width_;
  std::array<Level, 3> levels_;
  Eigen::VectorXd level_input(int level, const PromptFields& f) const;
};

}  // namespace urbanrisk::repr
