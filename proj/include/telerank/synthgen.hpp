#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "telerank/geo.hpp"
#include "telerank/ingest.hpp"
#include "telerank/poi_database.hpp"
#include "telerank/util/random.hpp"

namespace telerank::synth {

struct Region {
  double lat_min = 51.40;
  double lat_max = 51.60;
  double lon_min = -0.25;
  double lon_max = 0.05;

  bool valid() const noexcept;
  bool contains(geo::LatLon p) const noexcept;
};

struct FleetConfig {
  std::size_t n_policies = 200;
  double delivery_fraction = 0.05;
  int trips_min = 3;
  int trips_max = 10;
  int sample_period_s = 10;
  std::uint64_t seed = 1;
  Region region;
  int poi_cluster_count = 12;
  int pois_per_cluster = 20;
  double poi_cluster_sigma_m = 60.0;
  int span_days = 30;
  UnixSeconds start_epoch = 1704067200;  // 2024-01-01T00:00:00Z
  // Per-policy delivery trip rate for k = 1 policies ~ Beta(a, b).
  double delivery_rate_a = 5.0;
  double delivery_rate_b = 2.0;
  // Per-policy rate of confusable errand runs for k = 0 policies ~ Beta(a, b).
  double errand_rate_a = 0.4;
  double errand_rate_b = 4.0;

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  // Plain-text `key = value` lines; '#' starts a comment. Unknown keys throw.
  static FleetConfig from_key_values(std::istream& in);
  void set(const std::string& key, const std::string& value);
};

enum class TripKind { Delivery, Personal, Errand };

std::string_view to_string(TripKind k) noexcept;

struct GroundTruth {
  std::map<std::string, int> policy_class;  // policy_id -> k
  std::map<std::string, int> trip_label;    // trip_id -> 1 if delivery

  // k = 0 policies carry only label-0 trips.
  bool consistent() const;
};

struct Home {
  std::string policy_id;
  geo::LatLon position;
};

struct Fleet {
  geo::PoiDatabase pois;
  std::vector<Home> homes;
  // Policy-major, time-ordered within policy.
  std::vector<ingest::GpsSample> samples;
  GroundTruth truth;
};

// Gaussian "high-street" clusters of commercial POIs inside the region.
geo::PoiDatabase generate_poi_db(const FleetConfig& config);

// Waypoints where a driver can wait and be classified commercial: POIs with
// at least one other POI within 40 m.
std::vector<geo::LatLon> commercial_hotspots(const geo::PoiDatabase& pois);

struct TraceContext {
  const geo::PoiDatabase& pois;
  const std::vector<geo::LatLon>& hotspots;
  Region region;
  int sample_period_s = 10;
};

// Simulates one trip starting at `start_time` from `home`. Delivery runs
// alternate long pickup waits at a commercial hotspot with short residential
// drop-offs; personal trips have at most three stops; errands (label 0)
// visit two or three commercial hotspots.
ingest::Trip generate_trip_trace(TripKind kind, const std::string& policy_id, geo::LatLon home,
                                 UnixSeconds start_time, const TraceContext& ctx, Rng& rng);

// Picks a trip start time for `kind` on the day beginning at `day_start`.
UnixSeconds draw_start_time(TripKind kind, UnixSeconds day_start, Rng& rng);

std::string policy_name(std::size_t index);

Fleet generate_fleet(const FleetConfig& config);

void write_samples_jsonl(std::ostream& out, const std::vector<ingest::GpsSample>& samples);
void write_homes_csv(std::ostream& out, const std::vector<Home>& homes);
std::map<std::string, geo::LatLon> read_homes_csv(std::istream& in);
void write_policy_truth_csv(std::ostream& out, const GroundTruth& truth);
void write_trip_truth_csv(std::ostream& out, const GroundTruth& truth);
std::map<std::string, int> read_label_csv(std::istream& in, const std::string& id_column,
                                          const std::string& label_column);

// Count-level simulator for fitting the mixture without GPS traces: each
// policy draws x trips, a class k, a rate q from that class's Beta, and
// y ~ Binomial(x, q).
struct CountProfileConfig {
  std::size_t n_policies = 5000;
  double minority_fraction = 0.005;
  // x = min_trips + Poisson(mean_extra_trips)
  int min_trips = 1;
  double mean_extra_trips = 4.5;
  double majority_a = 1.2;
  double majority_b = 10.8;
  double minority_a = 4.0;
  double minority_b = 2.0;
  std::uint64_t seed = 7;
};

struct CountProfile {
  std::vector<std::string> policy_ids;
  std::vector<int> x;
  std::vector<int> y;
  std::vector<int> k;
};

CountProfile generate_count_profile(const CountProfileConfig& config);

}  // namespace telerank::synth
