#pragma once

#include <span>

namespace urbanrisk::geo {

inline constexpr double kEarthRadiusM = 6371008.8;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const LatLon&) const = default;
};

struct PlanarPoint {
  double x = 0.0;  // meters east of the origin
  double y = 0.0;  // meters north of the origin
};

/// Local equirectangular projection anchored at an origin. Accurate to well
/// below a meter over the ~1 degree span of a city.
class LocalProjection {
 public:
  explicit LocalProjection(LatLon origin);

  PlanarPoint to_local(LatLon p) const;
  LatLon to_latlon(PlanarPoint p) const;
  LatLon origin() const { return origin_; }

 private:
  LatLon origin_;
  double cos_lat_;
};

/// Great-circle distance via the equirectangular approximation at the mean latitude.
double distance_m(LatLon a, LatLon b);

LatLon centroid(std::span<const LatLon> points);

bool valid_coordinates(LatLon p);

}  // namespace urbanrisk::geo
