#include "telerank/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace telerank::geo {
namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

bool in_range(LatLon p) noexcept {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 &&
         p.lon <= 180.0;
}

double haversine_m(LatLon a, LatLon b) noexcept {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = std::clamp(s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

double degree_displacement(LatLon a, LatLon b) noexcept { return std::hypot(b.lat - a.lat, b.lon - a.lon); }

LatLon offset_m(LatLon origin, double meters_north, double meters_east) noexcept {
  const double dlat = meters_north / kEarthRadiusM / kDegToRad;
  const double dlon = meters_east / (kEarthRadiusM * std::cos(origin.lat * kDegToRad)) / kDegToRad;
  return {origin.lat + dlat, origin.lon + dlon};
}

}  // namespace telerank::geo
