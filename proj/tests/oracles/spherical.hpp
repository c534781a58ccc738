#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oracle {

// Great-circle distance by the spherical law of cosines, in long double so
// the small-angle cancellation stays well below a meter.
inline double law_of_cosines_m(double lat1, double lon1, double lat2, double lon2, double radius = 6371000.0) {
  constexpr long double d2r = std::numbers::pi_v<long double> / 180.0L;
  const long double p1 = lat1 * d2r, p2 = lat2 * d2r, dl = (lon2 - lon1) * d2r;
  long double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  c = std::clamp(c, -1.0L, 1.0L);
  return static_cast<double>(radius * std::acos(c));
}

}  // namespace oracle
