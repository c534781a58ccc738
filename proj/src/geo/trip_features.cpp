#include "telerank/trip_features.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "telerank/util/csv.hpp"

namespace telerank::geo {

std::string_view to_string(Destination d) noexcept {
  switch (d) {
    case Destination::Commercial:
      return "commercial";
    case Destination::Home:
      return "home";
    case Destination::Residential:
      return "residential";
  }
  return "residential";
}

Destination destination_from_string(std::string_view s) {
  if (s == "commercial") return Destination::Commercial;
  if (s == "home") return Destination::Home;
  if (s == "residential") return Destination::Residential;
  throw std::invalid_argument("unknown destination '" + std::string(s) + "'");
}

std::vector<StationaryPoint> detect_stationary_points(const ingest::Trip& trip, double eps_deg,
                                                      double min_duration_s) {
  std::vector<StationaryPoint> points;
  const auto& s = trip.samples;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j + 1 < s.size() && degree_displacement(s[j].position(), s[j + 1].position()) <= eps_deg) ++j;
    if (j > i) {
      const double duration = static_cast<double>(s[j].timestamp - s[i].timestamp);
      if (duration >= min_duration_s) {
        StationaryPoint p;
        double lat = 0.0, lon = 0.0;
        for (std::size_t k = i; k <= j; ++k) {
          lat += s[k].latitude;
          lon += s[k].longitude;
        }
        const double n = static_cast<double>(j - i + 1);
        p.center = {lat / n, lon / n};
        p.start_time = s[i].timestamp;
        p.end_time = s[j].timestamp;
        p.duration_s = duration;
        p.first_sample = i;
        p.last_sample = j;
        points.push_back(p);
      }
    }
    i = j + 1;
  }
  return points;
}

Destination classify_destination(const StationaryPoint& point, const PoiDatabase& pois, LatLon home) {
  if (pois.count_within(point.center, kCommercialRadiusM) >= kCommercialMinPois) return Destination::Commercial;
  if (haversine_m(point.center, home) <= kHomeRadiusM) return Destination::Home;
  return Destination::Residential;
}

std::array<double, kFeatureCount> TripFeatures::as_array() const noexcept {
  return {trip_duration_minutes,
          static_cast<double>(number_waits_trip),
          average_trip_wait_minutes,
          static_cast<double>(total_commercial_waits),
          ratio_busy_waits,
          time_of_day_sin,
          time_of_day_cos};
}

TripFeatures TripFeatures::from_array(const std::array<double, kFeatureCount>& v) noexcept {
  TripFeatures f;
  f.trip_duration_minutes = v[0];
  f.number_waits_trip = static_cast<int>(std::lround(v[1]));
  f.average_trip_wait_minutes = v[2];
  f.total_commercial_waits = static_cast<int>(std::lround(v[3]));
  f.ratio_busy_waits = v[4];
  f.time_of_day_sin = v[5];
  f.time_of_day_cos = v[6];
  return f;
}

std::array<double, 2> time_of_day_encoding(UnixSeconds t, long utc_offset_s) noexcept {
  const UnixSeconds local = t + utc_offset_s;
  const UnixSeconds sec = ((local % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(sec) / static_cast<double>(kSecondsPerDay);
  if (sec == 0) return {0.0, 1.0};
  return {std::sin(angle), std::cos(angle)};
}

TripAnalysis analyze_trip(const ingest::Trip& trip, const PoiDatabase& pois, LatLon home, long utc_offset_s) {
  TripAnalysis a;
  a.stops = detect_stationary_points(trip);
  double total_wait_s = 0.0;
  for (auto& stop : a.stops) {
    stop.classification = classify_destination(stop, pois, home);
    total_wait_s += stop.duration_s;
    switch (stop.classification) {
      case Destination::Commercial:
        ++a.features.total_commercial_waits;
        break;
      case Destination::Home:
        ++a.home_waits;
        break;
      case Destination::Residential:
        ++a.residential_waits;
        break;
    }
  }
  TripFeatures& f = a.features;
  f.trip_duration_minutes = static_cast<double>(trip.end_time - trip.start_time) / 60.0;
  f.number_waits_trip = static_cast<int>(a.stops.size());
  f.average_trip_wait_minutes = a.stops.empty() ? 0.0 : total_wait_s / static_cast<double>(a.stops.size()) / 60.0;
  f.ratio_busy_waits = static_cast<double>(f.total_commercial_waits) / std::max(1, a.residential_waits);
  const auto tod = time_of_day_encoding(trip.start_time, utc_offset_s);
  f.time_of_day_sin = tod[0];
  f.time_of_day_cos = tod[1];
  return a;
}

TripFeatures extract_features(const ingest::Trip& trip, const PoiDatabase& pois, LatLon home, long utc_offset_s) {
  return analyze_trip(trip, pois, home, utc_offset_s).features;
}

void write_feature_csv(std::ostream& out, const std::vector<FeatureRow>& rows) {
  out << "trip_id,policy_id";
  for (auto name : kFeatureNames) out << ',' << name;
  out << '\n';
  char buf[64];
  for (const auto& row : rows) {
    out << row.trip_id << ',' << row.policy_id;
    for (double v : row.features.as_array()) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

std::vector<FeatureRow> read_feature_csv(std::istream& in) {
  const CsvTable table = CsvTable::read(in);
  const std::size_t trip = table.column("trip_id");
  const std::size_t policy = table.column("policy_id");
  std::array<std::size_t, kFeatureCount> cols{};
  for (std::size_t k = 0; k < kFeatureCount; ++k) cols[k] = table.column(kFeatureNames[k]);
  std::vector<FeatureRow> rows;
  rows.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::array<double, kFeatureCount> v{};
    for (std::size_t k = 0; k < kFeatureCount; ++k) v[k] = table.number(r, cols[k]);
    rows.push_back({table.cell(r, trip), table.cell(r, policy), TripFeatures::from_array(v)});
  }
  return rows;
}

}  // namespace telerank::geo
