#pragma once

#include <span>
#include <string>
#include <vector>

#include "urbanrisk/data/records.hpp"

namespace urbanrisk::data {

struct DedupRule {
  double max_distance_m = 10.0;
  int max_days_apart = 30;
};

struct RecordDiagnostic {
  std::string record_id;
  std::string message;
};

struct DedupResult {
  std::vector<BuildingRecord> records;  // sorted by id
  std::vector<RecordDiagnostic> rejected;
  std::size_t merged = 0;  // number of input records absorbed into another
};

/// Merges near-duplicate spatio-temporal records of the same city: pairs within
/// rule.max_distance_m and rule.max_days_apart carrying identical hazard
/// annotations collapse into one record that keeps the earliest timestamp and
/// the mean coordinates of everything merged into it. Merging repeats to a
/// fixpoint, so the output contains no mergeable pair.
DedupResult deduplicate(std::span<const BuildingRecord> records, const DedupRule& rule = {});

}  // namespace urbanrisk::data
