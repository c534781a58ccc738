#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "telerank/geo.hpp"
#include "telerank/ingest.hpp"
#include "telerank/poi_database.hpp"

namespace telerank::geo {

enum class Destination { Commercial, Home, Residential };

std::string_view to_string(Destination d) noexcept;
Destination destination_from_string(std::string_view s);

struct StationaryPoint {
  LatLon center;
  UnixSeconds start_time = 0;
  UnixSeconds end_time = 0;
  double duration_s = 0.0;
  // Residential until classify_destination has been applied.
  Destination classification = Destination::Residential;
  std::size_t first_sample = 0;
  std::size_t last_sample = 0;
};

inline constexpr double kStationaryEpsDeg = 1e-5;
inline constexpr double kMinStopDurationS = 90.0;
inline constexpr double kCommercialRadiusM = 50.0;
inline constexpr std::size_t kCommercialMinPois = 2;
inline constexpr double kHomeRadiusM = 150.0;

// Maximal runs of consecutive samples whose degree displacement is <=
// eps_deg; runs shorter than min_duration_s are dropped.
std::vector<StationaryPoint> detect_stationary_points(const ingest::Trip& trip,
                                                      double eps_deg = kStationaryEpsDeg,
                                                      double min_duration_s = kMinStopDurationS);

// Commercial (>= 2 POIs within 50 m) wins over home (within 150 m of home);
// anything else is residential.
Destination classify_destination(const StationaryPoint& point, const PoiDatabase& pois, LatLon home);

inline constexpr std::size_t kFeatureCount = 7;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "TRIP_DURATION_MINUTES", "NUMBER_WAITS_TRIP", "AVERAGE_TRIP_WAIT_MINUTES", "TOTAL_COMMERCIAL_WAITS",
    "RATIO_BUSY_WAITS",      "TIME_OF_DAY_SIN",   "TIME_OF_DAY_COS"};

inline constexpr std::size_t kCommercialWaitsColumn = 3;

struct TripFeatures {
  double trip_duration_minutes = 0.0;
  int number_waits_trip = 0;
  double average_trip_wait_minutes = 0.0;
  int total_commercial_waits = 0;
  double ratio_busy_waits = 0.0;
  double time_of_day_sin = 0.0;
  double time_of_day_cos = 1.0;

  std::array<double, kFeatureCount> as_array() const noexcept;
  static TripFeatures from_array(const std::array<double, kFeatureCount>& v) noexcept;

  friend bool operator==(const TripFeatures&, const TripFeatures&) = default;
};

struct TripAnalysis {
  TripFeatures features;
  std::vector<StationaryPoint> stops;  // classified
  int home_waits = 0;
  int residential_waits = 0;
};

// Trip start time of day as (sin, cos) of 2*pi*seconds_since_midnight/86400.
// `utc_offset_s` shifts UTC to the local clock.
std::array<double, 2> time_of_day_encoding(UnixSeconds t, long utc_offset_s = 0) noexcept;

TripAnalysis analyze_trip(const ingest::Trip& trip, const PoiDatabase& pois, LatLon home, long utc_offset_s = 0);

TripFeatures extract_features(const ingest::Trip& trip, const PoiDatabase& pois, LatLon home,
                              long utc_offset_s = 0);

// Feature CSV: header `trip_id,policy_id,<seven feature names>`.
struct FeatureRow {
  std::string trip_id;
  std::string policy_id;
  TripFeatures features;
};

void write_feature_csv(std::ostream& out, const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> read_feature_csv(std::istream& in);

}  // namespace telerank::geo
