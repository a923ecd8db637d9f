#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanrisk/data/partition.hpp"
#include "urbanrisk/data/records.hpp"

namespace urbanrisk::eval {

inline constexpr int kManifestSchemaVersion = 1;

enum class SplitRegime { kTemporal, kSpatialBlock, kUnseenCity };

std::string_view regime_name(SplitRegime r);
std::optional<SplitRegime> parse_regime(std::string_view s);

struct YearBounds {
  int train_end = 2021;
  int val_end = 2023;
};

// Per-record facts the regime constraints are checked against.
struct RecordInfo {
  data::Partition partition = data::Partition::kTrain;
  std::string city_id;
  int year = 0;
  std::string cell;  // spatial-block regime only: "<city>:<ix>:<iy>"
};

struct SplitManifest {
  SplitRegime regime = SplitRegime::kTemporal;
  std::uint64_t seed = 0;
  // Regime parameters. Temporal bounds are per city after clipping.
  std::map<std::string, YearBounds, std::less<>> year_bounds;
  double cell_km = 1.0;
  double test_frac = 0.2;
  std::string held_out_city;
  // Cities whose prompts may only use non-label metadata.
  std::vector<std::string> metadata_only_cities;
  std::map<std::string, RecordInfo, std::less<>> records;  // keyed by record id
  std::vector<std::string> warnings;

  data::PartitionMap partitions() const;
  std::size_t count(data::Partition p) const;
};

/// Assigns purely by record year: year <= train_end is train, year <= val_end
/// is val, later years are test. Bounds are clipped per city to its available
/// years (with a warning). Throws ArgumentError when a partition ends up empty.
SplitManifest temporal_split(std::span<const data::BuildingRecord> records,
                             YearBounds bounds = {});

/// Bins buildings into cell_km grid cells of a local projection anchored at
/// each city's centroid and holds out round(test_frac * cells) seeded cells as
/// test. Throws ArgumentError for missing coordinates or fewer than 5 cells.
SplitManifest spatial_block_split(std::span<const data::BuildingRecord> records,
                                  double cell_km = 1.0, double test_frac = 0.2,
                                  std::uint64_t seed = 0);

/// Every record of held_out_city is test; the rest is train. Throws
/// ArgumentError for an unknown city or a single-city dataset.
SplitManifest unseen_city_split(std::span<const data::BuildingRecord> records,
                                const std::string& held_out_city);

std::string cell_id(const std::string& city_id, double x_m, double y_m, double cell_km);

/// Regime constraints checked from the manifest alone. Returns one message
/// per violation; empty means clean.
std::vector<std::string> audit_manifest(const SplitManifest& m);

// Throws ArgumentError naming the first record the manifest does not assign,
// or when the manifest has no test records.
void check_manifest_covers(const SplitManifest& m, std::span<const data::BuildingRecord> records);

// What a prompt builder is about to read for one city.
struct PromptInputs {
  std::string city_id;
  std::vector<std::string> event_ids;  // hazard annotations read as labels
  bool uses_targets = false;
};

// Throws LeakageError when labels of a metadata-only city would feed a prompt.
void audit_prompt_inputs(const SplitManifest& m, const PromptInputs& inputs);

nlohmann::json manifest_to_json(const SplitManifest& m);
SplitManifest manifest_from_json(const nlohmann::json& j);  // throws FormatError

}  // namespace urbanrisk::eval
