#pragma once

#include <span>
#include <vector>

#include "urbanrisk/data/partition.hpp"
#include "urbanrisk/data/records.hpp"

namespace urbanrisk::data {

/// Mean/population-scale statistics over train-partition records only. Every
/// record must carry a partition label. Zero-variance features get scale 1
/// and are listed in zero_variance.
NormalizationStats fit_normalization(std::span<const BuildingRecord> records,
                                     const PartitionMap& partitions);

// Affine-normalizes features and elevation in place. Targets are left untouched.
void apply_normalization(std::vector<BuildingRecord>& records, const NormalizationStats& stats);
void invert_normalization(std::vector<BuildingRecord>& records, const NormalizationStats& stats);

CityDataset normalize(const CityDataset& dataset, const PartitionMap& partitions);
CityDataset denormalize(const CityDataset& dataset);

}  // namespace urbanrisk::data
