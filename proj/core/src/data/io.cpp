#include "urbanrisk/data/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::data {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw FormatError("cannot parse " + what + " from '" + s + "'");
  }
}

bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw FormatError("cannot parse " + what + " from '" + s + "'");
}

// Reads a header-led CSV, checking the header matches exactly.
template <typename Fn>
void read_csv(std::istream& in, const std::vector<std::string>& header, const std::string& what,
              Fn&& on_row) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(what + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_csv_line(line) != header) throw FormatError(what + ": unexpected header '" + line + "'");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw FormatError(what + ": line " + std::to_string(lineno) + " has " +
                        std::to_string(cells.size()) + " fields, expected " +
                        std::to_string(header.size()));
    }
    on_row(cells);
  }
}

std::string fmt_double(double v) {
  std::ostringstream ss;
  ss.precision(std::numeric_limits<double>::max_digits10);
  ss << v;
  return ss.str();
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw FormatError("cannot open " + p.string() + " for writing");
  return f;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw FormatError("cannot open " + p.string());
  return f;
}

}  // namespace

json record_to_json(const BuildingRecord& r) {
  json features = json::object();
  json masks = json::object();
  for (auto g : kAllFeatureGroups) {
    const std::string name(group_name(g));
    masks[name] = r.is_missing(g);
    if (r.is_missing(g)) {
      features[name] = nullptr;
    } else {
      json grp = json::object();
      for (const auto& [k, v] : r.group(g)) grp[k] = v;
      features[name] = std::move(grp);
    }
  }
  json j = {{"id", r.id},
            {"building_id", r.building_id},
            {"city_id", r.city_id},
            {"lat", r.lat},
            {"lon", r.lon},
            {"elevation", r.elevation},
            {"year", r.year},
            {"features", std::move(features)},
            {"masks", std::move(masks)},
            {"targets",
             {{"flood_depth", r.targets.flood_depth},
              {"heat_stress", r.targets.heat_stress},
              {"structural_vulnerability", r.targets.structural_vulnerability},
              {"accessibility_score", r.targets.accessibility_score}}},
            {"hazard_events", r.hazard_events},
            {"node_attachment", r.node_attachment}};
  if (r.day_of_year) j["day_of_year"] = *r.day_of_year;
  return j;
}

BuildingRecord record_from_json(const json& j) {
  try {
    BuildingRecord r;
    r.id = j.at("id").get<std::string>();
    r.building_id = j.value("building_id", r.id);
    r.city_id = j.at("city_id").get<std::string>();
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    r.lat = j.contains("lat") && !j["lat"].is_null() ? j["lat"].get<double>() : nan;
    r.lon = j.contains("lon") && !j["lon"].is_null() ? j["lon"].get<double>() : nan;
    r.elevation = j.at("elevation").get<double>();
    r.year = j.at("year").get<int>();
    if (j.contains("day_of_year") && !j["day_of_year"].is_null()) {
      r.day_of_year = j["day_of_year"].get<int>();
    }
    const json masks = j.value("masks", json::object());
    const auto& features = j.at("features");
    for (auto g : kAllFeatureGroups) {
      const std::string name(group_name(g));
      const bool masked = masks.value(name, false);
      const bool present = features.contains(name) && !features[name].is_null();
      if (masked) {
        r.missing[static_cast<int>(g)] = true;
        continue;
      }
      if (!present) {
        throw FormatError("record " + r.id + ": feature group '" + name +
                          "' absent without a mask");
      }
      for (const auto& [k, v] : features[name].items()) r.group(g).emplace(k, v.get<double>());
    }
    const auto& t = j.at("targets");
    r.targets.flood_depth = t.at("flood_depth").get<double>();
    r.targets.heat_stress = t.at("heat_stress").get<double>();
    r.targets.structural_vulnerability = t.at("structural_vulnerability").get<double>();
    r.targets.accessibility_score = t.at("accessibility_score").get<double>();
    r.hazard_events = j.value("hazard_events", std::vector<std::string>{});
    std::sort(r.hazard_events.begin(), r.hazard_events.end());
    r.node_attachment = j.value("node_attachment", std::string{});
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed building record: ") + e.what());
  }
}

void write_records_jsonl(std::ostream& out, std::span<const BuildingRecord> records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

std::vector<BuildingRecord> read_records_jsonl(std::istream& in) {
  std::vector<BuildingRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError("records line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(record_from_json(j));
  }
  return out;
}

void write_nodes_csv(std::ostream& out, const graph::RoadNetwork& net) {
  out << "id,lat,lon\n";
  for (const auto& n : net.nodes()) out << n.id << ',' << fmt_double(n.lat) << ',' << fmt_double(n.lon) << '\n';
}

void write_edges_csv(std::ostream& out, const graph::RoadNetwork& net) {
  out << "id,from,to,travel_time_s,capacity,is_evacuation\n";
  for (const auto& e : net.edges()) {
    out << e.id << ',' << net.node(e.from).id << ',' << net.node(e.to).id << ','
        << fmt_double(e.travel_time_s) << ',' << fmt_double(e.capacity) << ','
        << (e.is_evacuation ? 1 : 0) << '\n';
  }
}

graph::RoadNetwork read_network_csv(std::istream& nodes_in, std::istream& edges_in) {
  std::vector<graph::Node> nodes;
  read_csv(nodes_in, {"id", "lat", "lon"}, "nodes.csv", [&](const auto& c) {
    nodes.push_back({c[0], parse_double(c[1], "lat"), parse_double(c[2], "lon")});
  });
  std::vector<graph::EdgeSpec> edges;
  read_csv(edges_in, {"id", "from", "to", "travel_time_s", "capacity", "is_evacuation"},
           "edges.csv", [&](const auto& c) {
             edges.push_back({c[0], c[1], c[2], parse_double(c[3], "travel_time_s"),
                              parse_double(c[4], "capacity"), parse_bool(c[5], "is_evacuation")});
           });
  return graph::RoadNetwork::build(std::move(nodes), edges);
}

void write_services_csv(std::ostream& out, const graph::ServicePoints& services) {
  out << "id,kind,node_id\n";
  for (const auto& f : services.facilities) {
    out << f.id << ',' << graph::facility_kind_name(f.kind) << ',' << f.node_id << '\n';
  }
}

graph::ServicePoints read_services_csv(std::istream& in) {
  graph::ServicePoints sp;
  read_csv(in, {"id", "kind", "node_id"}, "services.csv", [&](const auto& c) {
    auto kind = graph::parse_facility_kind(c[1]);
    if (!kind) throw FormatError("services.csv: unknown facility kind '" + c[1] + "'");
    sp.facilities.push_back({c[0], *kind, c[2]});
  });
  return sp;
}

void write_scenario_csv(std::ostream& out, const graph::HazardScenario& scenario) {
  out << "edge_id,depth_m\n";
  for (const auto& d : scenario.depths) out << d.edge_id << ',' << fmt_double(d.depth_m) << '\n';
}

graph::HazardScenario read_scenario_csv(std::istream& in, std::string id) {
  graph::HazardScenario s;
  s.id = std::move(id);
  read_csv(in, {"edge_id", "depth_m"}, "scenario " + s.id, [&](const auto& c) {
    s.depths.push_back({c[0], parse_double(c[1], "depth_m")});
  });
  s.validate();
  return s;
}

std::vector<graph::HazardScenario> read_scenario_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<graph::HazardScenario> out;
  for (const auto& f : files) {
    auto in = open_in(f);
    out.push_back(read_scenario_csv(in, f.stem().string()));
  }
  return out;
}

namespace {

json stat_json(const AffineStat& s) {
  return {{"mean", s.mean}, {"scale", s.scale}, {"zero_variance", s.zero_variance}};
}

AffineStat stat_from(const json& j) {
  return {j.at("mean").get<double>(), j.at("scale").get<double>(), j.at("zero_variance").get<bool>()};
}

}  // namespace

json normalization_to_json(const NormalizationStats& s) {
  json features = json::object();
  for (const auto& [k, v] : s.features) features[k] = stat_json(v);
  json targets = json::object();
  for (std::size_t i = 0; i < TargetVector::kSize; ++i) {
    targets[std::string(kTargetNames[i])] = stat_json(s.targets[i]);
  }
  return {{"features", std::move(features)},
          {"elevation", stat_json(s.elevation)},
          {"targets", std::move(targets)},
          {"zero_variance", s.zero_variance}};
}

NormalizationStats normalization_from_json(const json& j) {
  try {
    NormalizationStats s;
    for (const auto& [k, v] : j.at("features").items()) s.features.emplace(k, stat_from(v));
    s.elevation = stat_from(j.at("elevation"));
    for (std::size_t i = 0; i < TargetVector::kSize; ++i) {
      s.targets[i] = stat_from(j.at("targets").at(std::string(kTargetNames[i])));
    }
    s.zero_variance = j.value("zero_variance", std::vector<std::string>{});
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed normalization stats: ") + e.what());
  }
}

json profile_to_json(const CityProfile& p) {
  return {{"climate_zone", p.climate_zone},       {"flood_intensity", p.flood_intensity},
          {"flood_duration", p.flood_duration},   {"flood_source", p.flood_source},
          {"heat_magnitude", p.heat_magnitude},   {"heat_duration", p.heat_duration},
          {"age_cohort", p.age_cohort},           {"materials", p.materials},
          {"income_level", p.income_level},       {"population_density", p.population_density},
          {"homeownership_rate", p.homeownership_rate},
          {"climate_scenario", p.climate_scenario}, {"seasonal_factor", p.seasonal_factor}};
}

CityProfile profile_from_json(const json& j) {
  CityProfile p;
  p.climate_zone = j.value("climate_zone", p.climate_zone);
  p.flood_intensity = j.value("flood_intensity", p.flood_intensity);
  p.flood_duration = j.value("flood_duration", p.flood_duration);
  p.flood_source = j.value("flood_source", p.flood_source);
  p.heat_magnitude = j.value("heat_magnitude", p.heat_magnitude);
  p.heat_duration = j.value("heat_duration", p.heat_duration);
  p.age_cohort = j.value("age_cohort", p.age_cohort);
  p.materials = j.value("materials", p.materials);
  p.income_level = j.value("income_level", p.income_level);
  p.population_density = j.value("population_density", p.population_density);
  p.homeownership_rate = j.value("homeownership_rate", p.homeownership_rate);
  p.climate_scenario = j.value("climate_scenario", p.climate_scenario);
  p.seasonal_factor = j.value("seasonal_factor", p.seasonal_factor);
  return p;
}

namespace {

json event_to_json(const HazardEvent& e) {
  return {{"id", e.id},   {"kind", e.kind}, {"year", e.year},         {"day_of_year", e.day_of_year},
          {"lat", e.lat}, {"lon", e.lon},   {"radius_m", e.radius_m}, {"intensity", e.intensity}};
}

HazardEvent event_from_json(const json& j) {
  return {j.at("id").get<std::string>(), j.at("kind").get<std::string>(), j.at("year").get<int>(),
          j.at("day_of_year").get<int>(),  j.at("lat").get<double>(),     j.at("lon").get<double>(),
          j.at("radius_m").get<double>(),  j.at("intensity").get<double>()};
}

}  // namespace

void save_corpus(const std::filesystem::path& dir, std::span<const SyntheticCity> cities) {
  std::filesystem::create_directories(dir);
  json manifest = {{"schema_version", kCorpusSchemaVersion}, {"cities", json::array()}};
  {
    auto out = open_out(dir / "records.jsonl");
    for (const auto& c : cities) write_records_jsonl(out, c.dataset.records);
  }
  for (const auto& c : cities) {
    const auto cdir = dir / c.dataset.city_id;
    std::filesystem::create_directories(cdir / "scenarios");
    {
      auto out = open_out(cdir / "nodes.csv");
      write_nodes_csv(out, *c.network);
    }
    {
      auto out = open_out(cdir / "edges.csv");
      write_edges_csv(out, *c.network);
    }
    {
      auto out = open_out(cdir / "services.csv");
      write_services_csv(out, c.services);
    }
    {
      auto out = open_out(cdir / "events.jsonl");
      for (const auto& e : c.events) out << event_to_json(e).dump() << '\n';
    }
    for (const auto& s : c.scenarios) {
      auto out = open_out(cdir / "scenarios" / (s.id + ".csv"));
      write_scenario_csv(out, s);
    }
    manifest["cities"].push_back({{"id", c.dataset.city_id},
                                  {"center", {{"lat", c.center.lat}, {"lon", c.center.lon}}},
                                  {"horizons", c.dataset.horizons},
                                  {"profile", profile_to_json(c.profile)}});
  }
  auto out = open_out(dir / "corpus.json");
  out << manifest.dump(2) << '\n';
}

std::vector<SyntheticCity> load_corpus(const std::filesystem::path& dir) {
  json manifest;
  try {
    auto in = open_in(dir / "corpus.json");
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("corpus.json: ") + e.what());
  }
  if (manifest.value("schema_version", 0) != kCorpusSchemaVersion) {
    throw FormatError("corpus.json: unsupported schema_version");
  }
  std::vector<BuildingRecord> records;
  {
    auto in = open_in(dir / "records.jsonl");
    records = read_records_jsonl(in);
  }
  std::map<std::string, std::vector<BuildingRecord>> by_city;
  for (auto& r : records) by_city[r.city_id].push_back(std::move(r));

  std::vector<SyntheticCity> cities;
  for (const auto& jc : manifest.at("cities")) {
    SyntheticCity c;
    const auto id = jc.at("id").get<std::string>();
    const auto cdir = dir / id;
    c.dataset.city_id = id;
    c.dataset.records = std::move(by_city[id]);
    c.dataset.horizons = jc.value("horizons", c.dataset.horizons);
    c.center = {jc.at("center").at("lat").get<double>(), jc.at("center").at("lon").get<double>()};
    c.profile = profile_from_json(jc.value("profile", json::object()));
    {
      auto nodes = open_in(cdir / "nodes.csv");
      auto edges = open_in(cdir / "edges.csv");
      c.network = std::make_shared<graph::RoadNetwork>(read_network_csv(nodes, edges));
    }
    {
      auto in = open_in(cdir / "services.csv");
      c.services = read_services_csv(in);
      c.services.validate(*c.network);
    }
    {
      auto in = open_in(cdir / "events.jsonl");
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty()) c.events.push_back(event_from_json(json::parse(line)));
      }
    }
    c.scenarios = read_scenario_dir(cdir / "scenarios");
    cities.push_back(std::move(c));
  }
  return cities;
}

std::vector<BuildingRecord> all_records(std::span<const SyntheticCity> cities) {
  std::vector<BuildingRecord> out;
  for (const auto& c : cities) out.insert(out.end(), c.dataset.records.begin(), c.dataset.records.end());
  return out;
}

}  // namespace urbanrisk::data
