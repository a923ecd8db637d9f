#include "urbanrisk/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <queue>
#include <set>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/graph/accessibility.hpp"
#include "urbanrisk/random.hpp"

namespace urbanrisk::data {
namespace {

using graph::NodeIndex;

std::string format_id(const char* fmt, int v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Smooth terrain: a meandering river valley plus a few hills.
struct ElevationField {
  double river_y0 = 0.0, river_amp = 0.0, river_wavelength = 1.0, river_phase = 0.0;
  double tilt = 0.0;
  struct Hill {
    double x, y, height, sigma;
  };
  std::vector<Hill> hills;

  double river_y(double x) const {
    return river_y0 + river_amp * std::sin(2.0 * std::numbers::pi * x / river_wavelength + river_phase);
  }
  double dist_to_river(double x, double y) const { return std::abs(y - river_y(x)); }
  double operator()(double x, double y) const {
    double e = 1.0 + 12.0 * (1.0 - std::exp(-dist_to_river(x, y) / 800.0)) + tilt * x;
    for (const auto& h : hills) {
      const double d2 = (x - h.x) * (x - h.x) + (y - h.y) * (y - h.y);
      e += h.height * std::exp(-d2 / (2.0 * h.sigma * h.sigma));
    }
    return std::max(e, 0.2);
  }
  double slope(double x, double y) const {
    constexpr double h = 5.0;
    const double gx = ((*this)(x + h, y) - (*this)(x - h, y)) / (2 * h);
    const double gy = ((*this)(x, y + h) - (*this)(x, y - h)) / (2 * h);
    return std::hypot(gx, gy);
  }
};

// Relative flood susceptibility of a location.
double susceptibility(double elevation, double imperviousness, double drainage) {
  return std::exp(-(elevation - 1.0) / 4.0) * (0.6 + 0.8 * imperviousness) /
         (0.6 + 0.4 * drainage);
}

struct LocalEvent {
  const HazardEvent* event;
  double x, y;
};

double local_flood_intensity(const std::vector<LocalEvent>& floods, double x, double y,
                             std::vector<const HazardEvent*>* hits, double susc) {
  double best = 0.0;
  for (const auto& f : floods) {
    const double d2 = (x - f.x) * (x - f.x) + (y - f.y) * (y - f.y);
    const double r = f.event->radius_m;
    const double v = f.event->intensity * std::exp(-d2 / (2.0 * r * r));
    best = std::max(best, v);
    if (hits && susc * v > 0.05) hits->push_back(f.event);
  }
  return best;
}

bool undirected_connected(std::size_t n, const std::vector<std::pair<int, int>>& links,
                          const std::vector<char>& alive) {
  if (n == 0) return false;
  std::vector<std::vector<int>> adj(n);
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (!alive[i]) continue;
    adj[static_cast<std::size_t>(links[i].first)].push_back(links[i].second);
    adj[static_cast<std::size_t>(links[i].second)].push_back(links[i].first);
  }
  std::vector<char> seen(n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++count;
        q.push(v);
      }
    }
  }
  return count == n;
}

struct BuildingBase {
  std::string building_id;
  double x, y;
  geo::LatLon pos;
  double elevation, slope, dist_water, green, imperv, drainage;
  double score0, age0, floors;
  int income;
  double density, homeownership;
  int day_of_year;
  NodeIndex node;
  double dist_hospital;
};

}  // namespace

void SynthConfig::validate() const {
  if (city_id.empty()) throw ConfigError("city_id must not be empty");
  if (n_buildings < 1) throw ConfigError("building count must be >= 1");
  if (n_years < 1) throw ConfigError("year count must be >= 1");
  if (!(extent_km > 0.0)) throw ConfigError("extent_km must be positive");
  if (!(node_spacing_m > 0.0) || node_spacing_m * 2.0 > extent_km * 1000.0) {
    throw ConfigError("node spacing too coarse for extent: network would be disconnected");
  }
  if (!(edge_drop_fraction >= 0.0) || edge_drop_fraction > 0.5) {
    throw ConfigError("edge_drop_fraction outside [0, 0.5] cannot guarantee a connected network");
  }
  if (arterial_every < 1) throw ConfigError("arterial_every must be >= 1");
  if (flood_events_per_year < 0.0 || heat_events_per_year < 0.0) {
    throw ConfigError("event rates must be non-negative");
  }
  if (n_hospitals + n_fire_stations < 1) throw ConfigError("need at least one emergency facility");
  if (n_shelters < 1) throw ConfigError("need at least one shelter");
  if (!(time_budget_s > 0.0)) throw ConfigError("time budget must be positive");
  try {
    policy.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

std::string scenario_id_for_year(const std::string& city_id, int year) {
  return city_id + "-Y" + std::to_string(year);
}

SyntheticCity synthesize_city(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, stable_hash(cfg.city_id)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

  SyntheticCity city;
  city.profile = cfg.profile;
  city.center = cfg.center;
  const geo::LocalProjection proj(cfg.center);
  const double half = cfg.extent_km * 500.0;

  // Terrain.
  ElevationField terrain;
  terrain.river_y0 = uniform(-0.3, 0.3) * half;
  terrain.river_amp = uniform(0.1, 0.3) * half;
  terrain.river_wavelength = uniform(1.5, 3.0) * half;
  terrain.river_phase = uniform(0.0, 2.0 * std::numbers::pi);
  terrain.tilt = uniform(-1.0, 1.0) * 1e-3;
  for (int i = 0; i < 4; ++i) {
    terrain.hills.push_back({uniform(-half, half), uniform(-half, half), uniform(2.0, 8.0),
                             uniform(300.0, 900.0)});
  }

  // Road grid.
  const int side = static_cast<int>(std::floor(2.0 * half / cfg.node_spacing_m)) + 1;
  std::vector<graph::Node> nodes;
  std::vector<geo::PlanarPoint> node_xy;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const geo::PlanarPoint p{-half + c * cfg.node_spacing_m + uniform(-0.1, 0.1) * cfg.node_spacing_m,
                                 -half + r * cfg.node_spacing_m + uniform(-0.1, 0.1) * cfg.node_spacing_m};
      const auto ll = proj.to_latlon(p);
      nodes.push_back({format_id("n%05d", r * side + c), ll.lat, ll.lon});
      node_xy.push_back(p);
    }
  }
  std::vector<std::pair<int, int>> links;
  std::vector<char> arterial;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const int u = r * side + c;
      if (c + 1 < side) {
        links.emplace_back(u, u + 1);
        arterial.push_back(r % cfg.arterial_every == 0);
      }
      if (r + 1 < side) {
        links.emplace_back(u, u + side);
        arterial.push_back(c % cfg.arterial_every == 0);
      }
    }
  }
  std::vector<char> alive(links.size(), 1);
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (arterial[i] || unit(rng) >= cfg.edge_drop_fraction) continue;
    alive[i] = 0;
    if (!undirected_connected(nodes.size(), links, alive)) alive[i] = 1;
  }
  std::vector<graph::EdgeSpec> specs;
  int edge_counter = 0;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (!alive[i]) continue;
    const auto [a, b] = links[i];
    const auto& pa = node_xy[static_cast<std::size_t>(a)];
    const auto& pb = node_xy[static_cast<std::size_t>(b)];
    const double length = std::hypot(pa.x - pb.x, pa.y - pb.y);
    const double speed = arterial[i] ? 13.9 : 8.3;
    for (int dir = 0; dir < 2; ++dir) {
      const int from = dir == 0 ? a : b;
      const int to = dir == 0 ? b : a;
      specs.push_back({format_id("e%06d", edge_counter++), nodes[static_cast<std::size_t>(from)].id,
                       nodes[static_cast<std::size_t>(to)].id, length / speed * uniform(0.9, 1.2),
                       arterial[i] ? 2.0 : 1.0, static_cast<bool>(arterial[i])});
    }
  }
  auto network = std::make_shared<graph::RoadNetwork>(graph::RoadNetwork::build(nodes, specs));
  city.network = network;

  // Service points on distinct nodes.
  {
    std::set<int> used;
    int fid = 0;
    auto place = [&](graph::FacilityKind kind, int count) {
      for (int i = 0; i < count; ++i) {
        int n;
        do {
          n = static_cast<int>(unit(rng) * static_cast<double>(nodes.size()));
          n = std::min(n, static_cast<int>(nodes.size()) - 1);
        } while (used.size() < nodes.size() && used.count(n));
        used.insert(n);
        city.services.facilities.push_back(
            {format_id("f%03d", fid++), kind, nodes[static_cast<std::size_t>(n)].id});
      }
    };
    place(graph::FacilityKind::kHospital, cfg.n_hospitals);
    place(graph::FacilityKind::kFireStation, cfg.n_fire_stations);
    place(graph::FacilityKind::kShelter, cfg.n_shelters);
  }
  const auto emergency = city.services.emergency_nodes(*network);
  const auto shelters = city.services.shelter_nodes(*network);
  std::vector<geo::PlanarPoint> hospital_xy;
  for (const auto& f : city.services.facilities) {
    if (f.kind == graph::FacilityKind::kHospital) {
      hospital_xy.push_back(node_xy[static_cast<std::size_t>(network->node_index(f.node_id))]);
    }
  }

  // Buildings, denser toward the center.
  std::vector<BuildingBase> buildings;
  buildings.reserve(static_cast<std::size_t>(cfg.n_buildings));
  for (int i = 0; i < cfg.n_buildings; ++i) {
    BuildingBase b;
    b.building_id = cfg.city_id + "-b" + format_id("%05d", i);
    b.x = uniform(-half, half) * (0.55 + 0.45 * unit(rng));
    b.y = uniform(-half, half) * (0.55 + 0.45 * unit(rng));
    b.pos = proj.to_latlon({b.x, b.y});
    b.elevation = terrain(b.x, b.y);
    b.slope = terrain.slope(b.x, b.y);
    b.dist_water = terrain.dist_to_river(b.x, b.y);
    const double urban = std::exp(-(b.x * b.x + b.y * b.y) / (2.0 * 0.5 * half * 0.5 * half));
    b.imperv = clamp01(0.25 + 0.55 * urban + 0.12 * gauss(rng));
    b.green = clamp01(1.0 - b.imperv * uniform(0.7, 1.0));
    b.drainage = uniform(0.5, 1.5);
    b.score0 = std::clamp(uniform(40.0, 95.0), 0.0, 100.0);
    b.age0 = uniform(5.0, 120.0);
    b.floors = std::floor(uniform(1.0, 2.0 + 6.0 * urban));
    b.income = 1 + std::min(4, static_cast<int>(unit(rng) * 5.0));
    b.density = 1500.0 + 9000.0 * urban * uniform(0.7, 1.3);
    b.homeownership = clamp01(0.3 + 0.1 * b.income + 0.1 * gauss(rng));
    b.day_of_year = 100 + static_cast<int>(unit(rng) * 150.0);
    b.node = network->nearest_node(b.pos);
    b.dist_hospital = 1e9;
    for (const auto& h : hospital_xy) {
      b.dist_hospital = std::min(b.dist_hospital, std::hypot(b.x - h.x, b.y - h.y));
    }
    buildings.push_back(b);
  }

  std::vector<NodeIndex> building_nodes;
  for (const auto& b : buildings) building_nodes.push_back(b.node);
  std::vector<int> node_degree(nodes.size(), -1);
  for (auto n : building_nodes) {
    if (node_degree[static_cast<std::size_t>(n)] < 0) {
      node_degree[static_cast<std::size_t>(n)] = network->degree(n);
    }
  }

  // Per-year hazards, features and targets.
  std::poisson_distribution<int> flood_count(cfg.flood_events_per_year);
  std::poisson_distribution<int> heat_count(cfg.heat_events_per_year);
  std::vector<std::vector<int>> flood_hist(buildings.size());  // per-building yearly hit counts

  for (int yi = 0; yi < cfg.n_years; ++yi) {
    const int year = cfg.start_year + yi;
    const double severity = uniform(0.5, 1.5);
    const double precip = 600.0 + 250.0 * severity + 40.0 * gauss(rng);
    const double tmax = 24.0 + 0.08 * yi + 2.0 * gauss(rng);
    const int n_heat = heat_count(rng);

    const std::size_t first_event = city.events.size();
    const int n_flood = flood_count(rng);
    for (int k = 0; k < n_flood; ++k) {
      const geo::PlanarPoint p{uniform(-half, half), uniform(-half, half)};
      const auto ll = proj.to_latlon(p);
      city.events.push_back({cfg.city_id + "-F" + std::to_string(year) + "-" + format_id("%03d", k),
                             "flood", year, 1 + static_cast<int>(unit(rng) * 365.0), ll.lat, ll.lon,
                             uniform(300.0, 1200.0), uniform(0.2, 1.0)});
    }
    for (int k = 0; k < n_heat; ++k) {
      city.events.push_back({cfg.city_id + "-H" + std::to_string(year) + "-" + format_id("%03d", k),
                             "heat", year, 150 + static_cast<int>(unit(rng) * 90.0), cfg.center.lat,
                             cfg.center.lon, half * 2.0, uniform(30.0, 38.0)});
    }
    std::vector<LocalEvent> floods;
    std::vector<std::string> heat_ids;
    for (std::size_t e = first_event; e < city.events.size(); ++e) {
      const auto& ev = city.events[e];
      if (ev.kind == "flood") {
        const auto p = proj.to_local({ev.lat, ev.lon});
        floods.push_back({&ev, p.x, p.y});
      } else {
        heat_ids.push_back(ev.id);
      }
    }

    // Road-level depths at edge midpoints.
    graph::HazardScenario scenario;
    scenario.id = scenario_id_for_year(cfg.city_id, year);
    for (const auto& e : network->edges()) {
      const auto& a = node_xy[static_cast<std::size_t>(e.from)];
      const auto& b = node_xy[static_cast<std::size_t>(e.to)];
      const double mx = 0.5 * (a.x + b.x), my = 0.5 * (a.y + b.y);
      const double local = local_flood_intensity(floods, mx, my, nullptr, 0.0);
      const double depth = susceptibility(terrain(mx, my), 0.7, 1.0) * (0.6 * severity + local) - 0.03;
      if (depth > 0.0) scenario.depths.push_back({e.id, depth});
    }
    const auto cn = graph::condition_network(network, scenario, cfg.policy);
    const auto access =
        graph::building_access(cn, building_nodes, emergency, shelters, cfg.time_budget_s);
    city.scenarios.push_back(std::move(scenario));

    for (std::size_t bi = 0; bi < buildings.size(); ++bi) {
      const auto& b = buildings[bi];
      BuildingRecord r;
      r.building_id = b.building_id;
      r.id = b.building_id + "-" + std::to_string(year);
      r.city_id = cfg.city_id;
      r.lat = b.pos.lat;
      r.lon = b.pos.lon;
      r.elevation = b.elevation;
      r.year = year;
      r.day_of_year = b.day_of_year;
      r.node_attachment = network->node(b.node).id;

      const double susc = susceptibility(b.elevation, b.imperv, b.drainage);
      std::vector<const HazardEvent*> hits;
      const double local = local_flood_intensity(floods, b.x, b.y, &hits, susc);
      for (const auto* ev : hits) r.hazard_events.push_back(ev->id);
      if (b.imperv > 0.6) r.hazard_events.insert(r.hazard_events.end(), heat_ids.begin(), heat_ids.end());
      std::sort(r.hazard_events.begin(), r.hazard_events.end());
      flood_hist[bi].push_back(static_cast<int>(hits.size()));
      int hist5 = 0;
      for (int k = std::max(0, yi - 4); k <= yi; ++k) hist5 += flood_hist[bi][static_cast<std::size_t>(k)];

      const double score = std::clamp(b.score0 - 0.15 * yi, 0.0, 100.0);
      const double age = b.age0 + yi;
      const double uhi = 3.0 * b.imperv - 2.0 * b.green;

      using FG = FeatureGroup;
      namespace f = feature;
      r.set(FG::kGeo, f::kSlope, b.slope);
      r.set(FG::kGeo, f::kDistWater, b.dist_water);
      r.set(FG::kGeo, f::kGreenCover, b.green);
      r.set(FG::kStruct, f::kStructuralScore, score);
      r.set(FG::kStruct, f::kAgeYears, age);
      r.set(FG::kStruct, f::kFloors, b.floors);
      r.set(FG::kStruct, f::kDamageProbability, std::clamp(0.65 - 0.006 * score, 0.02, 0.95));
      r.set(FG::kDemo, f::kIncomeQuintile, b.income);
      r.set(FG::kDemo, f::kPopulationDensity, b.density);
      r.set(FG::kDemo, f::kHomeownership, b.homeownership);
      r.set(FG::kInfra, f::kImperviousness, b.imperv);
      r.set(FG::kInfra, f::kDrainageCapacity, b.drainage);
      r.set(FG::kInfra, f::kDistHospital, b.dist_hospital);
      r.set(FG::kClimate, f::kAnnualPrecip, precip);
      r.set(FG::kClimate, f::kSummerTmax, tmax + 0.5 * uhi);
      r.set(FG::kClimate, f::kHeatwaveDays, static_cast<double>(n_heat));
      r.set(FG::kClimate, f::kFloodHistory, hist5);
      const auto& a = access[bi];
      r.set(FG::kTransport, f::kHazardTravelTime, std::min(a.travel_time_s, 3600.0));
      r.set(FG::kTransport, f::kReachable, a.reachable ? 1.0 : 0.0);
      r.set(FG::kTransport, f::kRedundancy, a.redundancy);
      r.set(FG::kTransport, f::kNodeDegree, node_degree[static_cast<std::size_t>(b.node)]);

      TargetVector t;
      t.flood_depth = std::max(0.0, susc * (0.6 * severity + local) - 0.03 + 0.03 * gauss(rng));
      t.heat_stress = tmax + uhi + 0.3 * std::log1p(b.density / 1000.0) + 0.4 * gauss(rng);
      t.structural_vulnerability = 100.0 - score + 0.25 * age + 15.0 * t.flood_depth + 2.0 * gauss(rng);
      t.accessibility_score = std::isfinite(a.travel_time_s)
                                  ? std::exp(-a.travel_time_s / cfg.time_budget_s) *
                                        (0.75 + 0.25 * std::min(a.redundancy, 3) / 3.0)
                                  : 0.0;
      t.sanitize();
      r.targets = t;
      city.dataset.records.push_back(std::move(r));
    }
  }

  city.dataset.city_id = cfg.city_id;
  std::sort(city.dataset.records.begin(), city.dataset.records.end(),
            [](const BuildingRecord& a, const BuildingRecord& b) { return a.id < b.id; });
  return city;
}

std::vector<graph::HazardScenario> scenario_ensemble(const graph::HazardScenario& base, int n,
                                                     std::uint64_t seed, double spread) {
  if (n < 1) throw ArgumentError("ensemble size must be >= 1");
  if (!(spread >= 0.0) || spread >= 1.0) throw ArgumentError("spread must be in [0, 1)");
  std::vector<graph::HazardScenario> out;
  out.reserve(static_cast<std::size_t>(n));
  out.push_back(base);
  Rng rng(derive_seed(seed, stable_hash(base.id)));
  std::uniform_real_distribution<double> factor(1.0 - spread, 1.0 + spread);
  for (int i = 1; i < n; ++i) {
    graph::HazardScenario s;
    s.id = base.id + "-m" + std::to_string(i);
    const double f = factor(rng);
    s.depths = base.depths;
    for (auto& d : s.depths) d.depth_m *= f;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace urbanrisk::data
