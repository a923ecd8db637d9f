#include "urbanrisk/data/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <tuple>

namespace urbanrisk::data {
namespace {

struct Working {
  BuildingRecord record;
  std::int64_t day = 0;
  double weight = 1.0;  // originals represented; keeps coordinate means exact across passes
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

bool mergeable(const Working& a, const Working& b, const DedupRule& rule) {
  if (a.record.city_id != b.record.city_id) return false;
  if (std::llabs(a.day - b.day) > rule.max_days_apart) return false;
  if (a.record.hazard_events != b.record.hazard_events) return false;
  return geo::distance_m(a.record.position(), b.record.position()) <= rule.max_distance_m;
}

// One merge pass; returns true if anything merged.
bool merge_pass(std::vector<Working>& items, const DedupRule& rule, std::size_t& merged) {
  // Sweep in (city, lat) order; latitude bounds the candidate window.
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(items[a].record.city_id, items[a].record.lat, items[a].record.id) <
           std::tie(items[b].record.city_id, items[b].record.lat, items[b].record.id);
  });
  // Degrees of latitude spanned by the distance threshold, padded.
  const double lat_window = rule.max_distance_m / 111000.0 * 1.01;

  DisjointSets sets(items.size());
  bool any = false;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Working& a = items[order[i]];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const Working& b = items[order[j]];
      if (b.record.city_id != a.record.city_id) break;
      if (b.record.lat - a.record.lat > lat_window) break;
      if (mergeable(a, b, rule)) any |= sets.unite(order[i], order[j]);
    }
  }
  if (!any) return false;

  std::vector<std::vector<std::size_t>> groups(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) groups[sets.find(i)].push_back(i);

  std::vector<Working> next;
  next.reserve(items.size());
  for (auto& members : groups) {
    if (members.empty()) continue;
    if (members.size() == 1) {
      next.push_back(std::move(items[members.front()]));
      continue;
    }
    // Earliest timestamp wins; ties resolved by id.
    auto base = *std::min_element(members.begin(), members.end(), [&](auto x, auto y) {
      return std::tie(items[x].day, items[x].record.id) < std::tie(items[y].day, items[y].record.id);
    });
    double w = 0.0, lat = 0.0, lon = 0.0;
    for (auto m : members) {
      w += items[m].weight;
      lat += items[m].weight * items[m].record.lat;
      lon += items[m].weight * items[m].record.lon;
    }
    Working out = std::move(items[base]);
    out.record.lat = lat / w;
    out.record.lon = lon / w;
    out.weight = w;
    merged += members.size() - 1;
    next.push_back(std::move(out));
  }
  items = std::move(next);
  return true;
}

}  // namespace

DedupResult deduplicate(std::span<const BuildingRecord> records, const DedupRule& rule) {
  DedupResult result;
  std::vector<Working> items;
  items.reserve(records.size());
  for (const auto& r : records) {
    if (!std::isfinite(r.lat) || !std::isfinite(r.lon) || !geo::valid_coordinates(r.position())) {
      result.rejected.push_back({r.id, "missing or invalid coordinates"});
      continue;
    }
    auto day = r.day_index();
    if (!day) {
      result.rejected.push_back({r.id, "missing or invalid timestamp (day_of_year)"});
      continue;
    }
    Working w{r, *day, 1.0};
    std::sort(w.record.hazard_events.begin(), w.record.hazard_events.end());
    items.push_back(std::move(w));
  }

  while (merge_pass(items, rule, result.merged)) {
  }

  std::sort(items.begin(), items.end(),
            [](const Working& a, const Working& b) { return a.record.id < b.record.id; });
  result.records.reserve(items.size());
  for (auto& w : items) result.records.push_back(std::move(w.record));
  return result;
}

}  // namespace urbanrisk::data
