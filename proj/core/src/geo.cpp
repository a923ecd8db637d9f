#include "urbanrisk/geo.hpp"

#include <cmath>
#include <numbers>

namespace urbanrisk::geo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

LocalProjection::LocalProjection(LatLon origin)
    : origin_(origin), cos_lat_(std::cos(origin.lat * kDegToRad)) {}

PlanarPoint LocalProjection::to_local(LatLon p) const {
  return {kEarthRadiusM * (p.lon - origin_.lon) * kDegToRad * cos_lat_,
          kEarthRadiusM * (p.lat - origin_.lat) * kDegToRad};
}

LatLon LocalProjection::to_latlon(PlanarPoint p) const {
  return {origin_.lat + p.y / (kEarthRadiusM * kDegToRad),
          origin_.lon + p.x / (kEarthRadiusM * kDegToRad * cos_lat_)};
}

double distance_m(LatLon a, LatLon b) {
  const double mean_lat = 0.5 * (a.lat + b.lat) * kDegToRad;
  const double dx = (b.lon - a.lon) * kDegToRad * std::cos(mean_lat);
  const double dy = (b.lat - a.lat) * kDegToRad;
  return kEarthRadiusM * std::hypot(dx, dy);
}

LatLon centroid(std::span<const LatLon> points) {
  LatLon c;
  if (points.empty()) return c;
  for (const auto& p : points) {
    c.lat += p.lat;
    c.lon += p.lon;
  }
  c.lat /= static_cast<double>(points.size());
  c.lon /= static_cast<double>(points.size());
  return c;
}

bool valid_coordinates(LatLon p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

}  // namespace urbanrisk::geo
