#include <algorithm>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "telerank/synthgen.hpp"
#include "telerank/trip_features.hpp"

using namespace telerank;
using namespace telerank::synth;

namespace {

FleetConfig small_fleet(std::uint64_t seed, std::size_t n = 40, double fraction = 0.25) {
  FleetConfig c;
  c.n_policies = n;
  c.delivery_fraction = fraction;
  c.seed = seed;
  c.trips_min = 3;
  c.trips_max = 6;
  return c;
}

std::string samples_text(const Fleet& f) {
  std::ostringstream out;
  write_samples_jsonl(out, f.samples);
  return out.str();
}

}  // namespace

TEST_CASE("POI database generation") {
  FleetConfig c;
  c.poi_cluster_count = 0;
  CHECK(generate_poi_db(c).empty());

  c.poi_cluster_count = 5;
  c.pois_per_cluster = 20;
  const auto db = generate_poi_db(c);
  CHECK(db.size() == 100);
  for (const auto& p : db.entries()) CHECK(c.region.contains(p.position));

  const auto again = generate_poi_db(c);
  REQUIRE(again.size() == db.size());
  for (std::size_t i = 0; i < db.size(); ++i) CHECK(again.entries()[i].position == db.entries()[i].position);

  c.region.lat_max = c.region.lat_min;
  CHECK_THROWS_AS(generate_poi_db(c), std::invalid_argument);
}

TEST_CASE("config validation and key-value parsing") {
  FleetConfig c;
  CHECK_NOTHROW(c.validate());
  c.delivery_fraction = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = FleetConfig{};
  c.trips_min = 5;
  c.trips_max = 4;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  std::istringstream in("# fleet\nn_policies = 12\ndelivery_fraction=0.5\nseed = 99\n\n");
  const auto parsed = FleetConfig::from_key_values(in);
  CHECK(parsed.n_policies == 12);
  CHECK(parsed.delivery_fraction == 0.5);
  CHECK(parsed.seed == 99);
  std::istringstream unknown("colour = red\n");
  CHECK_THROWS(FleetConfig::from_key_values(unknown));
}

TEST_CASE("trip traces by kind") {
  FleetConfig c;
  const auto db = generate_poi_db(c);
  const auto hotspots = commercial_hotspots(db);
  REQUIRE_FALSE(hotspots.empty());
  const TraceContext ctx{db, hotspots, c.region, c.sample_period_s};
  const geo::LatLon home{51.45, -0.2};

  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Rng rng(seed);
    const auto start = draw_start_time(TripKind::Delivery, c.start_epoch, rng);
    const auto trip = generate_trip_trace(TripKind::Delivery, "P", home, start, ctx, rng);
    CHECK(ingest::validate_trip(trip).empty());
    const auto f = geo::extract_features(trip, db, home);
    CHECK(f.total_commercial_waits >= 2);
    CHECK(f.number_waits_trip >= 6);
    CHECK(f.number_waits_trip <= 15);
    for (const auto& s : trip.samples) CHECK(c.region.contains(s.position()));

    Rng rng2(seed + 1000);
    const auto ps = draw_start_time(TripKind::Personal, c.start_epoch, rng2);
    const auto personal = generate_trip_trace(TripKind::Personal, "P", home, ps, ctx, rng2);
    CHECK(ingest::validate_trip(personal).empty());
    CHECK(geo::extract_features(personal, db, home).number_waits_trip <= 3);
  }

  // Same seed, same trace.
  auto trace = [&](std::uint64_t seed) {
    Rng rng(seed);
    const auto t = generate_trip_trace(TripKind::Delivery, "P", home, c.start_epoch + 18 * 3600, ctx, rng);
    std::ostringstream out;
    write_samples_jsonl(out, t.samples);
    return out.str();
  };
  CHECK(trace(7) == trace(7));
  CHECK(trace(7) != trace(8));
}

TEST_CASE("fleet determinism and consistency") {
  const auto a = generate_fleet(small_fleet(4));
  const auto b = generate_fleet(small_fleet(4));
  CHECK(samples_text(a) == samples_text(b));
  CHECK(a.truth.policy_class == b.truth.policy_class);
  CHECK(a.truth.trip_label == b.truth.trip_label);
  CHECK(samples_text(generate_fleet(small_fleet(5))) != samples_text(a));

  CHECK(a.truth.consistent());
  CHECK(a.homes.size() == 40);
  int k1 = 0;
  for (const auto& [p, k] : a.truth.policy_class) k1 += k;
  CHECK(k1 == 10);

  // Policies with k = 1 mix delivery and ordinary trips.
  std::map<std::string, std::pair<int, int>> per_policy;
  for (const auto& [trip, label] : a.truth.trip_label) {
    auto& c = per_policy[trip.substr(0, trip.rfind('-'))];
    (label ? c.second : c.first)++;
  }
  for (const auto& [p, k] : a.truth.policy_class) {
    if (k == 1) {
      CHECK(per_policy[p].second > 0);
      CHECK(per_policy[p].first > 0);
    }
  }

  // Samples are policy-major and time-ordered, and segment back into the labeled trips.
  ingest::ParseResult parsed;
  for (const auto& s : a.samples) parsed.by_policy[s.policy_id].push_back(s);
  std::size_t trips = 0;
  for (const auto& [p, samples] : parsed.by_policy) {
    CHECK(std::is_sorted(samples.begin(), samples.end(),
                         [](const auto& x, const auto& y) { return x.timestamp < y.timestamp; }));
    for (const auto& t : ingest::segment_trips(samples)) {
      CHECK(a.truth.trip_label.count(t.trip_id) == 1);
      CHECK(ingest::validate_trip(t).empty());
      ++trips;
    }
  }
  CHECK(trips == a.truth.trip_label.size());
}

TEST_CASE("no delivery policies means no delivery trips") {
  const auto f = generate_fleet(small_fleet(9, 30, 0.0));
  for (const auto& [t, label] : f.truth.trip_label) CHECK(label == 0);
  for (const auto& [p, k] : f.truth.policy_class) CHECK(k == 0);
}

TEST_CASE("delivery policy count follows the fraction") {
  FleetConfig c = small_fleet(12, 1000, 0.01);
  c.trips_min = 1;
  c.trips_max = 1;
  const auto f = generate_fleet(c);
  int k1 = 0;
  for (const auto& [p, k] : f.truth.policy_class) k1 += k;
  CHECK(k1 == 10);
}

TEST_CASE("truth CSV round trip") {
  const auto f = generate_fleet(small_fleet(2, 10));
  std::ostringstream pol, trip, homes;
  write_policy_truth_csv(pol, f.truth);
  write_trip_truth_csv(trip, f.truth);
  write_homes_csv(homes, f.homes);
  std::istringstream pin(pol.str()), tin(trip.str()), hin(homes.str());
  CHECK(read_label_csv(pin, "policy_id", "k") == f.truth.policy_class);
  CHECK(read_label_csv(tin, "trip_id", "label") == f.truth.trip_label);
  const auto h = read_homes_csv(hin);
  CHECK(h.size() == 10);
  CHECK(h.at(f.homes[3].policy_id) == f.homes[3].position);
}

TEST_CASE("count profile") {
  CountProfileConfig c;
  c.n_policies = 2000;
  c.minority_fraction = 0.05;
  const auto a = generate_count_profile(c);
  const auto b = generate_count_profile(c);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(std::accumulate(a.k.begin(), a.k.end(), 0) == 100);
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    CHECK(a.x[i] >= c.min_trips);
    CHECK(a.y[i] >= 0);
    CHECK(a.y[i] <= a.x[i]);
  }
  const double mean_x = std::accumulate(a.x.begin(), a.x.end(), 0.0) / a.x.size();
  CHECK(mean_x == doctest::Approx(c.min_trips + c.mean_extra_trips).epsilon(0.05));
}
