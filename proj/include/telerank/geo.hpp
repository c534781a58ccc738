#pragma once

namespace telerank::geo {

// Mean Earth radius used for every great-circle distance in the project.
inline constexpr double kEarthRadiusM = 6371000.0;

struct LatLon {
  double lat = 0.0;  // degrees, WGS84
  double lon = 0.0;  // degrees, WGS84

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

bool in_range(LatLon p) noexcept;

// Great-circle distance in meters via the haversine formula.
double haversine_m(LatLon a, LatLon b) noexcept;

// Euclidean displacement in raw degrees, sqrt(dlat^2 + dlon^2).
double degree_displacement(LatLon a, LatLon b) noexcept;

// Point reached by moving `meters` north and `meters_east` east from `origin`
// on a local tangent plane. Good to well under a meter at city scale.
LatLon offset_m(LatLon origin, double meters_north, double meters_east) noexcept;

}  // namespace telerank::geo
