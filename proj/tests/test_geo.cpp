#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "oracles/spherical.hpp"
#include "telerank/geo.hpp"
#include "telerank/poi_database.hpp"
#include "telerank/trip_features.hpp"
#include "telerank/util/random.hpp"

using namespace telerank;
using namespace telerank::geo;

namespace {

ingest::GpsSample sample(UnixSeconds t, LatLon p) {
  ingest::GpsSample s;
  s.policy_id = "P";
  s.latitude = p.lat;
  s.longitude = p.lon;
  s.timestamp = t;
  return s;
}

ingest::Trip make_trip(std::vector<ingest::GpsSample> samples) {
  ingest::Trip t;
  t.trip_id = "P-" + std::to_string(samples.front().timestamp);
  t.policy_id = "P";
  t.start_time = samples.front().timestamp;
  t.end_time = samples.back().timestamp;
  t.samples = std::move(samples);
  return t;
}

// Appends a stationary run of `n` samples every `period` seconds at p.
void dwell(std::vector<ingest::GpsSample>& out, UnixSeconds& t, LatLon p, int n, int period = 10) {
  for (int i = 0; i < n; ++i) {
    out.push_back(sample(t, p));
    t += period;
  }
}

// Appends moving samples (~100 m apart) heading north from p.
void drive(std::vector<ingest::GpsSample>& out, UnixSeconds& t, LatLon p, int n) {
  for (int i = 1; i <= n; ++i) {
    out.push_back(sample(t, offset_m(p, 100.0 * i, 0.0)));
    t += 10;
  }
}

const LatLon kBase{51.5, -0.1};

}  // namespace

TEST_CASE("haversine examples") {
  CHECK(haversine_m(kBase, kBase) == 0.0);
  const LatLon b{51.5090, -0.1000};
  const double d = haversine_m(kBase, b);
  CHECK(std::abs(d - 1001.5) <= 1.0);
  CHECK(std::abs(d - static_cast<double>(oracle::law_of_cosines_m(51.5, -0.1, 51.509, -0.1))) <= 1e-3);
  CHECK(std::abs(haversine_m({0, 0}, {0, 180}) - std::numbers::pi * kEarthRadiusM) <= 1.0);
  CHECK(std::abs(haversine_m({90, 0}, {-90, 0}) - std::numbers::pi * kEarthRadiusM) <= 1.0);
  CHECK(std::abs(haversine_m({30, 20}, {-30, -160}) - std::numbers::pi * kEarthRadiusM) <= 1.0);
}

TEST_CASE("haversine agrees with the law of cosines and is a symmetric metric") {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const LatLon a{uniform(rng, -89, 89), uniform(rng, -180, 180)};
    const LatLon b{uniform(rng, -89, 89), uniform(rng, -180, 180)};
    const double d = haversine_m(a, b);
    CHECK(d >= 0.0);
    CHECK(d == haversine_m(b, a));
    // Law of cosines in long double loses accuracy only at tiny distances.
    CHECK(std::abs(d - static_cast<double>(oracle::law_of_cosines_m(a.lat, a.lon, b.lat, b.lon))) <= 1e-3);
  }
}

TEST_CASE("offset_m is accurate at city scale") {
  const LatLon p = offset_m(kBase, 30.0, 40.0);
  CHECK(haversine_m(kBase, p) == doctest::Approx(50.0).epsilon(1e-3));
}

TEST_CASE("POI index radius queries equal a linear scan") {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Poi> pois;
    const int n = uniform_int(rng, 0, 60);
    // Mix a dense city block with points near the poles and the antimeridian.
    const int mode = trial % 3;
    for (int i = 0; i < n; ++i) {
      LatLon p;
      if (mode == 0) p = offset_m(kBase, uniform(rng, -400, 400), uniform(rng, -400, 400));
      else if (mode == 1) p = {uniform(rng, 89.9, 90.0), uniform(rng, -180, 180)};
      else p = {uniform(rng, -0.01, 0.01), uniform(rng, 0, 1) < 0.5 ? uniform(rng, 179.995, 180) : uniform(rng, -180, -179.995)};
      pois.push_back({p});
    }
    const PoiDatabase db(pois, uniform(rng, 0.0005, 0.02));
    LatLon q = mode == 0 ? offset_m(kBase, uniform(rng, -300, 300), uniform(rng, -300, 300))
               : mode == 1 ? LatLon{uniform(rng, 89.95, 90.0), uniform(rng, -180, 180)}
                           : LatLon{0.0, uniform(rng, 0, 1) < 0.5 ? 180.0 : -179.999};
    const double radius = uniform(rng, 0, 1) < 0.5 ? 50.0 : uniform(rng, 1.0, 1500.0);
    std::vector<std::size_t> brute;
    for (std::size_t i = 0; i < pois.size(); ++i) {
      if (haversine_m(q, pois[i].position) <= radius) brute.push_back(i);
    }
    CHECK(db.within_radius(q, radius) == brute);
    CHECK(db.count_within(q, radius) == brute.size());
  }
}

TEST_CASE("POI CSV round trip and rejection") {
  const PoiDatabase db({{{51.5, -0.1}}, {{51.6, -0.2}}});
  std::ostringstream out;
  db.write_csv(out);
  std::istringstream in(out.str());
  const auto back = PoiDatabase::read_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back.entries()[1].position == LatLon{51.6, -0.2});
  std::istringstream bad("lat,lon,kind\n95,0,commercial\n");
  CHECK_THROWS(PoiDatabase::read_csv(bad));
  std::istringstream bad_kind("lat,lon,kind\n50,0,school\n");
  CHECK_THROWS(PoiDatabase::read_csv(bad_kind));
}

TEST_CASE("stationary point examples") {
  SUBCASE("13 identical samples over 120 s") {
    std::vector<ingest::GpsSample> s;
    UnixSeconds t = 1000;
    dwell(s, t, kBase, 13);
    const auto pts = detect_stationary_points(make_trip(s));
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].duration_s == 120.0);
    CHECK(pts[0].start_time == 1000);
    CHECK(pts[0].end_time == 1120);
    CHECK(pts[0].center == kBase);
  }
  SUBCASE("60 s at a traffic light is discarded") {
    std::vector<ingest::GpsSample> s;
    UnixSeconds t = 0;
    drive(s, t, kBase, 5);
    dwell(s, t, offset_m(kBase, 600, 0), 7);
    drive(s, t, offset_m(kBase, 600, 0), 5);
    CHECK(detect_stationary_points(make_trip(s)).empty());
  }
  SUBCASE("two runs separated by motion") {
    std::vector<ingest::GpsSample> s;
    UnixSeconds t = 0;
    dwell(s, t, kBase, 13);
    drive(s, t, kBase, 10);
    const LatLon second = offset_m(kBase, 2000, 0);
    dwell(s, t, second, 13);
    const auto pts = detect_stationary_points(make_trip(s));
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].end_time < pts[1].start_time);
    CHECK(haversine_m(pts[1].center, second) < 1e-6);
  }
  SUBCASE("exactly 90 s is kept, 89 s is not") {
    std::vector<ingest::GpsSample> s = {sample(0, kBase), sample(90, kBase)};
    CHECK(detect_stationary_points(make_trip(s)).size() == 1);
    s[1].timestamp = 89;
    CHECK(detect_stationary_points(make_trip(s)).empty());
  }
  SUBCASE("displacement is the Euclidean norm in degrees") {
    // Per-coordinate 0.8e-5 but norm 1.13e-5: not stationary.
    std::vector<ingest::GpsSample> s = {sample(0, kBase), sample(100, {kBase.lat + 0.8e-5, kBase.lon + 0.8e-5})};
    CHECK(detect_stationary_points(make_trip(s)).empty());
    s[1] = sample(100, {kBase.lat + 0.6e-5, kBase.lon + 0.6e-5});
    const auto pts = detect_stationary_points(make_trip(s));
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].center.lat == doctest::Approx(kBase.lat + 0.3e-5).epsilon(1e-12));
  }
}

TEST_CASE("stationary points on random jittered trips never overlap") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ingest::GpsSample> s;
    UnixSeconds t = 0;
    LatLon p = kBase;
    for (int seg = 0; seg < 10; ++seg) {
      if (uniform(rng, 0, 1) < 0.5) {
        const int n = uniform_int(rng, 1, 30);
        for (int i = 0; i < n; ++i) {
          s.push_back(sample(t, {p.lat + uniform(rng, -3e-6, 3e-6), p.lon}));
          t += uniform_int(rng, 1, 20);
        }
      } else {
        drive(s, t, p, uniform_int(rng, 1, 10));
        p = s.back().position();
      }
    }
    const auto pts = detect_stationary_points(make_trip(s));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(pts[i].duration_s >= 90.0);
      CHECK(pts[i].duration_s == static_cast<double>(pts[i].end_time - pts[i].start_time));
      if (i > 0) CHECK(pts[i - 1].end_time < pts[i].start_time);
    }
  }
}

TEST_CASE("destination classification examples") {
  StationaryPoint pt;
  pt.center = kBase;
  const LatLon far_home = offset_m(kBase, 500, 0);
  SUBCASE("two POIs at 10 m and 40 m") {
    const PoiDatabase db({{offset_m(kBase, 10, 0)}, {offset_m(kBase, 0, 40)}});
    CHECK(classify_destination(pt, db, far_home) == Destination::Commercial);
    // Commercial wins even at home.
    CHECK(classify_destination(pt, db, kBase) == Destination::Commercial);
  }
  SUBCASE("one POI, home 100 m away") {
    const PoiDatabase db({{offset_m(kBase, 10, 0)}});
    CHECK(classify_destination(pt, db, offset_m(kBase, 100, 0)) == Destination::Home);
  }
  SUBCASE("nothing nearby") {
    CHECK(classify_destination(pt, PoiDatabase{}, far_home) == Destination::Residential);
  }
  SUBCASE("radius boundaries") {
    const PoiDatabase db({{offset_m(kBase, 49.9, 0)}, {offset_m(kBase, -50.5, 0)}});
    CHECK(classify_destination(pt, db, offset_m(kBase, 149.5, 0)) == Destination::Home);
    CHECK(classify_destination(pt, db, offset_m(kBase, 150.5, 0)) == Destination::Residential);
  }
}

TEST_CASE("time of day encoding") {
  const auto midnight = time_of_day_encoding(1704067200);
  CHECK(midnight[0] == 0.0);
  CHECK(midnight[1] == 1.0);
  const auto six = time_of_day_encoding(1704067200 + 6 * 3600);
  CHECK(six[0] == doctest::Approx(1.0));
  CHECK(std::abs(six[1]) < 1e-12);
  // 23:00 UTC is local midnight at +01:00.
  const auto shifted = time_of_day_encoding(1704067200 - 3600, 3600);
  CHECK(shifted[0] == 0.0);
  CHECK(shifted[1] == 1.0);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto e = time_of_day_encoding(uniform_int(rng, 0, 2'000'000'000), uniform_int(rng, -43200, 50400));
    CHECK(std::abs(e[0] * e[0] + e[1] * e[1] - 1.0) <= 1e-12);
  }
}

TEST_CASE("feature extraction") {
  const LatLon home = offset_m(kBase, -3000, 0);
  std::vector<Poi> poi_list;
  std::vector<LatLon> shops;
  for (int k = 0; k < 3; ++k) {
    const LatLon c = offset_m(kBase, 1000.0 * k, 2000);
    shops.push_back(c);
    poi_list.push_back({offset_m(c, 5, 0)});
    poi_list.push_back({offset_m(c, -5, 5)});
  }
  const PoiDatabase db(poi_list);

  SUBCASE("no stops") {
    std::vector<ingest::GpsSample> s;
    UnixSeconds t = 1704067200;
    drive(s, t, kBase, 30);
    const auto f = extract_features(make_trip(s), db, home);
    CHECK(f.trip_duration_minutes == doctest::Approx(290.0 / 60.0));
    CHECK(f.number_waits_trip == 0);
    CHECK(f.average_trip_wait_minutes == 0.0);
    CHECK(f.total_commercial_waits == 0);
    CHECK(f.ratio_busy_waits == 0.0);
    CHECK(f.time_of_day_sin == 0.0);
    CHECK(f.time_of_day_cos == 1.0);
  }
  SUBCASE("three commercial and two residential stops") {
    std::vector<ingest::GpsSample> s;
    UnixSeconds t = 1704067200 + 3600;
    const std::vector<LatLon> stops = {shops[0], offset_m(kBase, 500, -1500), shops[1],
                                       offset_m(kBase, 1500, -1500), shops[2]};
    const std::vector<int> lengths = {31, 13, 19, 13, 25};  // 300, 120, 180, 120, 240 s
    for (std::size_t i = 0; i < stops.size(); ++i) {
      drive(s, t, stops[i], 3);
      dwell(s, t, stops[i], lengths[i]);
    }
    const auto trip = make_trip(s);
    const auto a = analyze_trip(trip, db, home);
    CHECK(a.features.number_waits_trip == 5);
    CHECK(a.features.total_commercial_waits == 3);
    CHECK(a.residential_waits == 2);
    CHECK(a.home_waits == 0);
    CHECK(a.features.ratio_busy_waits == 1.5);
    CHECK(a.features.average_trip_wait_minutes == doctest::Approx(960.0 / 5 / 60));
    CHECK(a.features.total_commercial_waits + a.home_waits + a.residential_waits == a.features.number_waits_trip);

    // Order of POI entries is irrelevant.
    auto reversed = poi_list;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(extract_features(trip, PoiDatabase(reversed), home) == a.features);
    CHECK(extract_features(trip, db, home) == a.features);
  }
  SUBCASE("commercial stops only") {
    std::vector<ingest::GpsSample> s;
    UnixSeconds t = 0;
    dwell(s, t, shops[0], 20);
    drive(s, t, shops[0], 3);
    dwell(s, t, shops[1], 20);
    const auto f = extract_features(make_trip(s), db, home);
    CHECK(f.total_commercial_waits == 2);
    CHECK(f.ratio_busy_waits == 2.0);  // denominator clamps at one
  }
}

TEST_CASE("feature CSV round trip") {
  std::vector<FeatureRow> rows = {{"T1", "P1", TripFeatures{12.5, 3, 2.25, 1, 0.5, 0.3, -0.95}},
                                  {"T2", "P2", TripFeatures{}}};
  std::ostringstream out;
  write_feature_csv(out, rows);
  CHECK(out.str().rfind("trip_id,policy_id,TRIP_DURATION_MINUTES", 0) == 0);
  std::istringstream in(out.str());
  const auto back = read_feature_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].trip_id == "T1");
  CHECK(back[0].features == rows[0].features);
  CHECK(TripFeatures::from_array(rows[0].features.as_array()) == rows[0].features);
}
