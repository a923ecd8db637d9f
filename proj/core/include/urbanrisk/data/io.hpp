#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanrisk/data/records.hpp"
#include "urbanrisk/data/synth.hpp"
#include "urbanrisk/graph/network.hpp"

namespace urbanrisk::data {

inline constexpr int kCorpusSchemaVersion = 1;

nlohmann::json record_to_json(const BuildingRecord& r);
// Missing lat/lon become NaN and a missing day_of_year stays empty so that
// downstream validation can report them per record. Throws FormatError for
// feature groups that are neither present nor masked.
BuildingRecord record_from_json(const nlohmann::json& j);

void write_records_jsonl(std::ostream& out, std::span<const BuildingRecord> records);
std::vector<BuildingRecord> read_records_jsonl(std::istream& in);

void write_nodes_csv(std::ostream& out, const graph::RoadNetwork& net);
void write_edges_csv(std::ostream& out, const graph::RoadNetwork& net);
graph::RoadNetwork read_network_csv(std::istream& nodes, std::istream& edges);

void write_services_csv(std::ostream& out, const graph::ServicePoints& services);
graph::ServicePoints read_services_csv(std::istream& in);

void write_scenario_csv(std::ostream& out, const graph::HazardScenario& scenario);
graph::HazardScenario read_scenario_csv(std::istream& in, std::string id);
// Every *.csv file in dir becomes one scenario named after the file stem; sorted by id.
std::vector<graph::HazardScenario> read_scenario_dir(const std::filesystem::path& dir);

nlohmann::json normalization_to_json(const NormalizationStats& s);
NormalizationStats normalization_from_json(const nlohmann::json& j);  // throws FormatError

nlohmann::json profile_to_json(const CityProfile& p);
CityProfile profile_from_json(const nlohmann::json& j);

/// On-disk corpus: <dir>/corpus.json, <dir>/records.jsonl and one
/// sub-directory per city holding nodes.csv, edges.csv, services.csv,
/// events.jsonl and scenarios/<id>.csv.
void save_corpus(const std::filesystem::path& dir, std::span<const SyntheticCity> cities);
std::vector<SyntheticCity> load_corpus(const std::filesystem::path& dir);

std::vector<BuildingRecord> all_records(std::span<const SyntheticCity> cities);

}  // namespace urbanrisk::data
