#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace urbanrisk::data {

enum class Partition { kTrain, kVal, kTest };

std::string_view partition_name(Partition p);
std::optional<Partition> parse_partition(std::string_view s);

// record id -> partition
using PartitionMap = std::map<std::string, Partition, std::less<>>;

}  // namespace urbanrisk::data
