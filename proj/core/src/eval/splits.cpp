#include "urbanrisk/eval/splits.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/geo.hpp"
#include "urbanrisk/random.hpp"

namespace urbanrisk::eval {

using data::Partition;
using nlohmann::json;

std::string_view regime_name(SplitRegime r) {
  switch (r) {
    case SplitRegime::kTemporal: return "temporal";
    case SplitRegime::kSpatialBlock: return "spatial_block";
    case SplitRegime::kUnseenCity: return "unseen_city";
  }
  return "?";
}

std::optional<SplitRegime> parse_regime(std::string_view s) {
  for (auto r : {SplitRegime::kTemporal, SplitRegime::kSpatialBlock, SplitRegime::kUnseenCity}) {
    if (regime_name(r) == s) return r;
  }
  return std::nullopt;
}

data::PartitionMap SplitManifest::partitions() const {
  data::PartitionMap out;
  for (const auto& [id, info] : records) out.emplace(id, info.partition);
  return out;
}

std::size_t SplitManifest::count(Partition p) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [p](const auto& kv) { return kv.second.partition == p; }));
}

namespace {

void add_record(SplitManifest& m, const data::BuildingRecord& r, Partition p, std::string cell = {}) {
  if (!m.records.emplace(r.id, RecordInfo{p, r.city_id, r.year, std::move(cell)}).second) {
    throw ArgumentError("duplicate record id " + r.id);
  }
}

std::map<std::string, std::vector<const data::BuildingRecord*>, std::less<>> by_city(
    std::span<const data::BuildingRecord> records) {
  std::map<std::string, std::vector<const data::BuildingRecord*>, std::less<>> out;
  for (const auto& r : records) out[r.city_id].push_back(&r);
  return out;
}

Partition by_year(int year, const YearBounds& b) {
  if (year <= b.train_end) return Partition::kTrain;
  if (year <= b.val_end) return Partition::kVal;
  return Partition::kTest;
}

}  // namespace

SplitManifest temporal_split(std::span<const data::BuildingRecord> records, YearBounds bounds) {
  if (bounds.val_end <= bounds.train_end) throw ArgumentError("val_end must exceed train_end");
  if (records.empty()) throw ArgumentError("cannot split an empty dataset");
  SplitManifest m;
  m.regime = SplitRegime::kTemporal;
  for (const auto& [city, rs] : by_city(records)) {
    int max_year = rs.front()->year;
    for (const auto* r : rs) max_year = std::max(max_year, r->year);
    YearBounds b = bounds;
    if (max_year <= b.val_end) {
      b.val_end = max_year - 1;
      b.train_end = std::min(b.train_end, b.val_end - 1);
      m.warnings.push_back("city " + city + " ends in " + std::to_string(max_year) +
                           ": bounds clipped to train <= " + std::to_string(b.train_end) +
                           ", val <= " + std::to_string(b.val_end));
    }
    std::array<std::size_t, 3> counts{};
    for (const auto* r : rs) {
      const auto p = by_year(r->year, b);
      ++counts[static_cast<std::size_t>(p)];
      add_record(m, *r, p);
    }
    for (auto p : {Partition::kTrain, Partition::kVal, Partition::kTest}) {
      if (counts[static_cast<std::size_t>(p)] == 0) {
        throw ArgumentError("temporal split leaves city " + city + " with an empty " +
                            std::string(data::partition_name(p)) + " partition");
      }
    }
    m.year_bounds[city] = b;
  }
  return m;
}

std::string cell_id(const std::string& city_id, double x_m, double y_m, double cell_km) {
  const double size = cell_km * 1000.0;
  return city_id + ":" + std::to_string(static_cast<long long>(std::floor(x_m / size))) + ":" +
         std::to_string(static_cast<long long>(std::floor(y_m / size)));
}

SplitManifest spatial_block_split(std::span<const data::BuildingRecord> records, double cell_km,
                                  double test_frac, std::uint64_t seed) {
  if (!(cell_km > 0.0)) throw ArgumentError("cell_km must be positive");
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw ArgumentError("test_frac must be in (0, 1)");
  SplitManifest m;
  m.regime = SplitRegime::kSpatialBlock;
  m.seed = seed;
  m.cell_km = cell_km;
  m.test_frac = test_frac;

  std::map<std::string, std::string, std::less<>> cell_of;  // record id -> cell
  std::set<std::string> cells;
  for (const auto& [city, rs] : by_city(records)) {
    std::vector<geo::LatLon> pts;
    for (const auto* r : rs) {
      if (!geo::valid_coordinates(r->position())) {
        throw ArgumentError("record " + r->id + " has no valid coordinates");
      }
      pts.push_back(r->position());
    }
    const geo::LocalProjection proj(geo::centroid(pts));
    for (const auto* r : rs) {
      const auto p = proj.to_local(r->position());
      auto c = cell_id(city, p.x, p.y, cell_km);
      cells.insert(c);
      cell_of[r->id] = std::move(c);
    }
  }
  if (cells.size() < 5) {
    throw ArgumentError("spatial block split needs at least 5 cells, found " + std::to_string(cells.size()));
  }
  std::vector<std::string> order(cells.begin(), cells.end());
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::lround(test_frac * static_cast<double>(order.size())));
  if (n_test == 0 || n_test == order.size()) {
    throw ArgumentError("test_frac leaves no train or no test cells");
  }
  const std::set<std::string> test_cells(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  for (const auto& r : records) {
    auto c = cell_of.at(r.id);
    const auto p = test_cells.count(c) ? Partition::kTest : Partition::kTrain;
    add_record(m, r, p, std::move(c));
  }
  return m;
}

SplitManifest unseen_city_split(std::span<const data::BuildingRecord> records,
                                const std::string& held_out_city) {
  const auto cities = by_city(records);
  if (cities.size() < 2) throw ArgumentError("unseen-city split needs at least 2 cities");
  if (!cities.count(held_out_city)) throw ArgumentError("unknown city id: " + held_out_city);
  SplitManifest m;
  m.regime = SplitRegime::kUnseenCity;
  m.held_out_city = held_out_city;
  m.metadata_only_cities = {held_out_city};
  for (const auto& r : records) {
    add_record(m, r, r.city_id == held_out_city ? Partition::kTest : Partition::kTrain);
  }
  return m;
}

std::vector<std::string> audit_manifest(const SplitManifest& m) {
  std::vector<std::string> out;
  switch (m.regime) {
    case SplitRegime::kTemporal:
      for (const auto& [id, info] : m.records) {
        auto b = m.year_bounds.find(info.city_id);
        if (b == m.year_bounds.end()) {
          out.push_back("record " + id + ": no year bounds for city " + info.city_id);
        } else if (by_year(info.year, b->second) != info.partition) {
          out.push_back("record " + id + ": year " + std::to_string(info.year) + " assigned " +
                        std::string(data::partition_name(info.partition)));
        }
      }
      break;
    case SplitRegime::kSpatialBlock: {
      std::map<std::string, std::set<Partition>> seen;
      for (const auto& [id, info] : m.records) {
        if (info.cell.empty()) out.push_back("record " + id + " has no cell");
        seen[info.cell].insert(info.partition);
      }
      for (const auto& [cell, parts] : seen) {
        if (parts.size() > 1) out.push_back("cell " + cell + " is shared across partitions");
      }
      break;
    }
    case SplitRegime::kUnseenCity:
      for (const auto& [id, info] : m.records) {
        if (info.city_id == m.held_out_city && info.partition != Partition::kTest) {
          out.push_back("held-out record " + id + " assigned " +
                        std::string(data::partition_name(info.partition)));
        }
      }
      break;
  }
  return out;
}

void check_manifest_covers(const SplitManifest& m, std::span<const data::BuildingRecord> records) {
  for (const auto& r : records) {
    if (!m.records.count(r.id)) throw ArgumentError("manifest does not assign record " + r.id);
  }
  if (m.count(Partition::kTest) == 0) throw ArgumentError("manifest has no test records");
}

void audit_prompt_inputs(const SplitManifest& m, const PromptInputs& inputs) {
  const auto& only = m.metadata_only_cities;
  if (std::find(only.begin(), only.end(), inputs.city_id) == only.end()) return;
  if (!inputs.event_ids.empty() || inputs.uses_targets) {
    throw LeakageError("prompt for held-out city " + inputs.city_id +
                       " would read event labels; only non-label metadata is allowed");
  }
}

json manifest_to_json(const SplitManifest& m) {
  json bounds = json::object();
  for (const auto& [city, b] : m.year_bounds) bounds[city] = {{"train_end", b.train_end}, {"val_end", b.val_end}};
  json params = {{"year_bounds", bounds}, {"cell_km", m.cell_km}, {"test_frac", m.test_frac},
                 {"held_out_city", m.held_out_city}};
  json assignments = json::object();
  json info = json::object();
  for (const auto& [id, r] : m.records) {
    assignments[id] = data::partition_name(r.partition);
    json ri = {{"city_id", r.city_id}, {"year", r.year}};
    if (!r.cell.empty()) ri["cell"] = r.cell;
    info[id] = std::move(ri);
  }
  return {{"schema_version", kManifestSchemaVersion},
          {"regime", regime_name(m.regime)},
          {"seed", m.seed},
          {"params", params},
          {"metadata_only_cities", m.metadata_only_cities},
          {"assignments", assignments},
          {"records", info},
          {"warnings", m.warnings}};
}

SplitManifest manifest_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kManifestSchemaVersion) {
      throw FormatError("unsupported manifest schema_version");
    }
    SplitManifest m;
    const auto regime = parse_regime(j.at("regime").get<std::string>());
    if (!regime) throw FormatError("unknown split regime " + j.at("regime").dump());
    m.regime = *regime;
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("params");
    for (const auto& [city, b] : p.at("year_bounds").items()) {
      m.year_bounds[city] = {b.at("train_end").get<int>(), b.at("val_end").get<int>()};
    }
    m.cell_km = p.at("cell_km").get<double>();
    m.test_frac = p.at("test_frac").get<double>();
    m.held_out_city = p.at("held_out_city").get<std::string>();
    m.metadata_only_cities = j.value("metadata_only_cities", std::vector<std::string>{});
    m.warnings = j.value("warnings", std::vector<std::string>{});
    const auto& info = j.at("records");
    for (const auto& [id, part] : j.at("assignments").items()) {
      const auto pp = data::parse_partition(part.get<std::string>());
      if (!pp) throw FormatError("record " + id + ": unknown partition " + part.dump());
      RecordInfo r;
      r.partition = *pp;
      const auto& ri = info.at(id);
      r.city_id = ri.at("city_id").get<std::string>();
      r.year = ri.at("year").get<int>();
      r.cell = ri.value("cell", std::string{});
      m.records.emplace(id, std::move(r));
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed split manifest: ") + e.what());
  }
}

}  // namespace urbanrisk::eval
