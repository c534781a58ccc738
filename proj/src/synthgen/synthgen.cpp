#include "telerank/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "telerank/util/csv.hpp"

namespace telerank::synth {

using geo::LatLon;
using ingest::EngineStatus;
using ingest::GpsSample;
using ingest::Trip;

bool Region::valid() const noexcept {
  return lat_min < lat_max && lon_min < lon_max && lat_min >= -90.0 && lat_max <= 90.0 && lon_min >= -180.0 &&
         lon_max <= 180.0;
}

bool Region::contains(LatLon p) const noexcept {
  return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
}

void FleetConfig::validate() const {
  if (!(delivery_fraction >= 0.0 && delivery_fraction <= 1.0)) {
    throw std::invalid_argument("delivery_fraction must be in [0, 1]");
  }
  if (trips_min < 1 || trips_max < trips_min) throw std::invalid_argument("trips_per_policy range is empty");
  if (trips_max > span_days) throw std::invalid_argument("trips_max may not exceed span_days (one trip per day)");
  if (sample_period_s < 1) throw std::invalid_argument("sample_period_s must be >= 1");
  if (!region.valid()) throw std::invalid_argument("region is degenerate");
  if (poi_cluster_count < 0 || pois_per_cluster < 0) throw std::invalid_argument("negative POI counts");
  if (!(poi_cluster_sigma_m > 0.0)) throw std::invalid_argument("poi_cluster_sigma_m must be positive");
  if (delivery_rate_a <= 0 || delivery_rate_b <= 0 || errand_rate_a <= 0 || errand_rate_b <= 0) {
    throw std::invalid_argument("Beta shapes must be positive");
  }
  if (delivery_fraction > 0.0 && poi_cluster_count == 0) {
    throw std::invalid_argument("delivery policies need at least one POI cluster");
  }
}

void FleetConfig::set(const std::string& key, const std::string& value) {
  auto to_d = [&] { return std::stod(value); };
  auto to_i = [&] { return std::stoi(value); };
  if (key == "n_policies") n_policies = std::stoul(value);
  else if (key == "delivery_fraction") delivery_fraction = to_d();
  else if (key == "trips_min") trips_min = to_i();
  else if (key == "trips_max") trips_max = to_i();
  else if (key == "sample_period_s") sample_period_s = to_i();
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "lat_min") region.lat_min = to_d();
  else if (key == "lat_max") region.lat_max = to_d();
  else if (key == "lon_min") region.lon_min = to_d();
  else if (key == "lon_max") region.lon_max = to_d();
  else if (key == "poi_cluster_count") poi_cluster_count = to_i();
  else if (key == "pois_per_cluster") pois_per_cluster = to_i();
  else if (key == "poi_cluster_sigma_m") poi_cluster_sigma_m = to_d();
  else if (key == "span_days") span_days = to_i();
  else if (key == "start_epoch") start_epoch = std::stoll(value);
  else if (key == "delivery_rate_a") delivery_rate_a = to_d();
  else if (key == "delivery_rate_b") delivery_rate_b = to_d();
  else if (key == "errand_rate_a") errand_rate_a = to_d();
  else if (key == "errand_rate_b") errand_rate_b = to_d();
  else throw std::invalid_argument("unknown fleet config key '" + key + "'");
}

FleetConfig FleetConfig::from_key_values(std::istream& in) {
  FleetConfig config;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(line_no) + ": missing '='");
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::logic_error& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

std::string_view to_string(TripKind k) noexcept {
  switch (k) {
    case TripKind::Delivery:
      return "delivery";
    case TripKind::Personal:
      return "personal";
    case TripKind::Errand:
      return "errand";
  }
  return "personal";
}

bool GroundTruth::consistent() const {
  std::map<std::string, std::pair<int, int>> per_policy;  // (#label0, #label1)
  for (const auto& [trip_id, label] : trip_label) {
    const auto dash = trip_id.rfind('-');
    if (dash == std::string::npos) return false;
    auto& c = per_policy[trip_id.substr(0, dash)];
    (label ? c.second : c.first)++;
  }
  for (const auto& [policy, counts] : per_policy) {
    const auto it = policy_class.find(policy);
    if (it == policy_class.end()) return false;
    if (it->second == 0 && counts.second > 0) return false;
    if (it->second == 1 && (counts.second == 0 || (counts.first + counts.second >= 2 && counts.first == 0))) {
      return false;
    }
  }
  return true;
}

namespace {

LatLon random_point(const Region& r, double margin_deg, Rng& rng) {
  return {uniform(rng, r.lat_min + margin_deg, r.lat_max - margin_deg),
          uniform(rng, r.lon_min + margin_deg, r.lon_max - margin_deg)};
}

double region_margin(const Region& r) {
  return std::min({0.004, (r.lat_max - r.lat_min) / 10.0, (r.lon_max - r.lon_min) / 10.0});
}

LatLon random_within(LatLon center, double radius_m, Rng& rng) {
  const double rr = radius_m * std::sqrt(uniform(rng, 0.0, 1.0));
  const double angle = uniform(rng, 0.0, 2.0 * 3.141592653589793);
  return geo::offset_m(center, rr * std::cos(angle), rr * std::sin(angle));
}

// A point that classifies as residential: no POI within 150 m and away from
// the driver's home.
LatLon residential_near(LatLon center, double radius_m, LatLon home, const TraceContext& ctx, Rng& rng) {
  for (int attempt = 0; attempt < 2000; ++attempt) {
    const LatLon p = random_within(center, radius_m, rng);
    if (!ctx.region.contains(p)) continue;
    if (ctx.pois.count_within(p, 150.0) > 0) continue;
    if (geo::haversine_m(p, home) < 250.0) continue;
    return p;
  }
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const LatLon p = random_point(ctx.region, 0.0, rng);
    if (ctx.pois.count_within(p, 150.0) == 0 && geo::haversine_m(p, home) >= 250.0) return p;
  }
  throw std::runtime_error("region has no room for residential points");
}

LatLon near_hotspot(LatLon hotspot, const TraceContext& ctx, Rng& rng) {
  const LatLon p = random_within(hotspot, 5.0, rng);
  return ctx.region.contains(p) ? p : hotspot;
}

class TraceBuilder {
 public:
  TraceBuilder(const std::string& policy_id, LatLon start, UnixSeconds t0, const TraceContext& ctx, Rng& rng)
      : ctx_(ctx), rng_(rng), pos_(start), t_(t0) {
    trip_.policy_id = policy_id;
    trip_.start_time = t0;
    emit(EngineStatus::On);
  }

  void drive_to(LatLon dest, bool allow_traffic_light = true) {
    if (allow_traffic_light && bernoulli(rng_, 0.35)) {
      const double f = uniform(rng_, 0.3, 0.7);
      const LatLon mid{pos_.lat + f * (dest.lat - pos_.lat), pos_.lon + f * (dest.lon - pos_.lon)};
      drive_straight(mid);
      wait(uniform(rng_, 15.0, 75.0));
    }
    drive_straight(dest);
  }

  void wait(double seconds) {
    const int ticks = static_cast<int>(std::ceil(seconds / ctx_.sample_period_s));
    for (int k = 0; k < ticks; ++k) {
      t_ += ctx_.sample_period_s;
      emit(EngineStatus::Running);
    }
  }

  LatLon position() const { return pos_; }

  Trip finish() {
    trip_.samples.back().engine = EngineStatus::Off;
    trip_.end_time = trip_.samples.back().timestamp;
    trip_.trip_id = ingest::make_trip_id(trip_.policy_id, trip_.start_time);
    return std::move(trip_);
  }

 private:
  void drive_straight(LatLon dest) {
    const double distance = geo::haversine_m(pos_, dest);
    if (distance < 5.0) {
      pos_ = dest;
      return;
    }
    const double speed = uniform(rng_, 8.0, 15.0);
    const int ticks = std::max(1, static_cast<int>(std::ceil(distance / speed / ctx_.sample_period_s)));
    const LatLon from = pos_;
    for (int k = 1; k <= ticks; ++k) {
      const double f = static_cast<double>(k) / ticks;
      pos_ = k == ticks ? dest : LatLon{from.lat + f * (dest.lat - from.lat), from.lon + f * (dest.lon - from.lon)};
      t_ += ctx_.sample_period_s;
      emit(EngineStatus::Running);
    }
  }

  void emit(EngineStatus engine) {
    GpsSample s;
    s.policy_id = trip_.policy_id;
    s.latitude = pos_.lat;
    s.longitude = pos_.lon;
    s.timestamp = t_;
    s.engine = engine;
    s.accel = std::array<double, 3>{0.0, 0.0, 0.0};
    trip_.samples.push_back(std::move(s));
  }

  const TraceContext& ctx_;
  Rng& rng_;
  Trip trip_;
  LatLon pos_;
  UnixSeconds t_;
};

// Random composition of `total` into `parts` positive integers.
std::vector<int> split_positive(int total, int parts, Rng& rng) {
  std::vector<int> out(static_cast<std::size_t>(parts), 1);
  for (int extra = total - parts; extra > 0; --extra) out[static_cast<std::size_t>(uniform_int(rng, 0, parts - 1))]++;
  return out;
}

Trip delivery_trip(const std::string& policy_id, LatLon home, UnixSeconds start, const TraceContext& ctx, Rng& rng) {
  if (ctx.hotspots.empty()) throw std::invalid_argument("delivery trips need commercial hotspots");
  const int n_stops = uniform_int(rng, 6, 15);
  const int pickups = std::max(2, static_cast<int>(std::lround(n_stops / 3.0)));
  const auto drops = split_positive(n_stops - pickups, pickups, rng);

  const LatLon hub = ctx.hotspots[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(ctx.hotspots.size()) - 1))];
  std::vector<LatLon> local;
  for (const LatLon& h : ctx.hotspots) {
    if (geo::haversine_m(h, hub) <= 600.0) local.push_back(h);
  }

  TraceBuilder b(policy_id, home, start, ctx, rng);
  for (int p = 0; p < pickups; ++p) {
    const LatLon pickup = local[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(local.size()) - 1))];
    b.drive_to(near_hotspot(pickup, ctx, rng));
    b.wait(uniform(rng, 300.0, 720.0));
    for (int d = 0; d < drops[static_cast<std::size_t>(p)]; ++d) {
      b.drive_to(residential_near(pickup, 2500.0, home, ctx, rng));
      b.wait(uniform(rng, 90.0, 240.0));
    }
  }
  b.drive_to(home);
  return b.finish();
}

Trip personal_trip(const std::string& policy_id, LatLon home, UnixSeconds start, const TraceContext& ctx, Rng& rng) {
  const double u = uniform(rng, 0.0, 1.0);
  const int n_stops = u < 0.35 ? 0 : u < 0.70 ? 1 : u < 0.90 ? 2 : 3;
  TraceBuilder b(policy_id, home, start, ctx, rng);
  for (int s = 0; s < n_stops; ++s) {
    const bool go_home = s > 0 && geo::haversine_m(b.position(), home) > 500.0 && bernoulli(rng, 0.3);
    b.drive_to(go_home ? home : residential_near(home, 5000.0, home, ctx, rng));
    b.wait(uniform(rng, 120.0, 1200.0));
  }
  b.drive_to(residential_near(home, 8000.0, home, ctx, rng));
  return b.finish();
}

Trip errand_trip(const std::string& policy_id, LatLon home, UnixSeconds start, const TraceContext& ctx, Rng& rng) {
  if (ctx.hotspots.empty()) return personal_trip(policy_id, home, start, ctx, rng);
  const int n_stops = uniform_int(rng, 3, 6);
  const int commercial = std::min(n_stops, uniform_int(rng, 2, 3));
  std::vector<bool> is_commercial(static_cast<std::size_t>(n_stops), false);
  std::fill(is_commercial.begin(), is_commercial.begin() + commercial, true);
  std::shuffle(is_commercial.begin(), is_commercial.end(), rng);
  TraceBuilder b(policy_id, home, start, ctx, rng);
  for (bool c : is_commercial) {
    if (c) {
      const LatLon h = ctx.hotspots[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(ctx.hotspots.size()) - 1))];
      b.drive_to(near_hotspot(h, ctx, rng));
      b.wait(uniform(rng, 180.0, 900.0));
    } else {
      b.drive_to(residential_near(home, 5000.0, home, ctx, rng));
      b.wait(uniform(rng, 120.0, 600.0));
    }
  }
  b.drive_to(home);
  return b.finish();
}

}  // namespace

geo::PoiDatabase generate_poi_db(const FleetConfig& config) {
  if (!config.region.valid()) throw std::invalid_argument("region is degenerate");
  Rng rng(derive_seed(config.seed, "poi-db"));
  std::vector<geo::Poi> entries;
  const double margin = region_margin(config.region);
  for (int c = 0; c < config.poi_cluster_count; ++c) {
    const LatLon center = random_point(config.region, margin, rng);
    for (int i = 0; i < config.pois_per_cluster; ++i) {
      LatLon p = center;
      for (int attempt = 0; attempt < 1000; ++attempt) {
        p = geo::offset_m(center, normal(rng, 0.0, config.poi_cluster_sigma_m),
                          normal(rng, 0.0, config.poi_cluster_sigma_m));
        if (config.region.contains(p)) break;
        p = center;
      }
      entries.push_back({p, geo::PoiKind::Commercial});
    }
  }
  return geo::PoiDatabase(std::move(entries));
}

std::vector<LatLon> commercial_hotspots(const geo::PoiDatabase& pois) {
  std::vector<LatLon> out;
  for (const auto& p : pois.entries()) {
    if (pois.count_within(p.position, 40.0) >= 2) out.push_back(p.position);
  }
  return out;
}

UnixSeconds draw_start_time(TripKind kind, UnixSeconds day_start, Rng& rng) {
  double hour = 0.0;
  switch (kind) {
    case TripKind::Delivery:
      hour = uniform(rng, 15.5, 21.5);  // evening shift
      break;
    case TripKind::Personal:
      hour = uniform(rng, 7.0, 20.0);
      break;
    case TripKind::Errand:
      hour = uniform(rng, 9.0, 19.5);
      break;
  }
  return day_start + static_cast<UnixSeconds>(hour * 3600.0);
}

Trip generate_trip_trace(TripKind kind, const std::string& policy_id, LatLon home, UnixSeconds start_time,
                         const TraceContext& ctx, Rng& rng) {
  switch (kind) {
    case TripKind::Delivery:
      return delivery_trip(policy_id, home, start_time, ctx, rng);
    case TripKind::Personal:
      return personal_trip(policy_id, home, start_time, ctx, rng);
    case TripKind::Errand:
      return errand_trip(policy_id, home, start_time, ctx, rng);
  }
  throw std::logic_error("unreachable");
}

std::string policy_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "P%06zu", index);
  return buf;
}

Fleet generate_fleet(const FleetConfig& config) {
  config.validate();
  Fleet fleet;
  fleet.pois = generate_poi_db(config);
  const auto hotspots = commercial_hotspots(fleet.pois);
  if (config.delivery_fraction > 0.0 && hotspots.empty()) {
    throw std::invalid_argument("POI layout produced no commercial hotspots");
  }
  const TraceContext ctx{fleet.pois, hotspots, config.region, config.sample_period_s};

  // Exactly round(n * fraction) delivery policies, placed at random.
  const auto n_delivery = static_cast<std::size_t>(std::llround(static_cast<double>(config.n_policies) * config.delivery_fraction));
  std::vector<std::size_t> order(config.n_policies);
  std::iota(order.begin(), order.end(), 0);
  Rng class_rng(derive_seed(config.seed, "policy-classes"));
  std::shuffle(order.begin(), order.end(), class_rng);
  std::vector<int> klass(config.n_policies, 0);
  for (std::size_t i = 0; i < n_delivery; ++i) klass[order[i]] = 1;

  const double margin = region_margin(config.region);
  for (std::size_t i = 0; i < config.n_policies; ++i) {
    const std::string pid = policy_name(i);
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(i) + 1));
    LatLon home = random_point(config.region, margin, rng);
    for (int attempt = 0; attempt < 1000 && fleet.pois.count_within(home, 300.0) > 0; ++attempt) {
      home = random_point(config.region, margin, rng);
    }
    fleet.homes.push_back({pid, home});
    fleet.truth.policy_class[pid] = klass[i];

    const int n_trips = uniform_int(rng, config.trips_min, config.trips_max);
    std::vector<int> days(static_cast<std::size_t>(config.span_days));
    std::iota(days.begin(), days.end(), 0);
    std::shuffle(days.begin(), days.end(), rng);
    days.resize(static_cast<std::size_t>(n_trips));
    std::sort(days.begin(), days.end());

    std::vector<TripKind> kinds;
    if (klass[i] == 1) {
      const double q = sample_beta(rng, config.delivery_rate_a, config.delivery_rate_b);
      for (int t = 0; t < n_trips; ++t) kinds.push_back(bernoulli(rng, q) ? TripKind::Delivery : TripKind::Personal);
      // Delivery policies show mixed usage: at least one delivery trip and,
      // given two or more trips, at least one personal one.
      const auto deliveries = std::count(kinds.begin(), kinds.end(), TripKind::Delivery);
      if (deliveries == 0) kinds[static_cast<std::size_t>(uniform_int(rng, 0, n_trips - 1))] = TripKind::Delivery;
      if (n_trips >= 2 && deliveries == n_trips) {
        kinds[static_cast<std::size_t>(uniform_int(rng, 0, n_trips - 1))] = TripKind::Personal;
      }
    } else {
      const double e = sample_beta(rng, config.errand_rate_a, config.errand_rate_b);
      for (int t = 0; t < n_trips; ++t) kinds.push_back(bernoulli(rng, e) ? TripKind::Errand : TripKind::Personal);
    }

    for (int t = 0; t < n_trips; ++t) {
      const TripKind kind = kinds[static_cast<std::size_t>(t)];
      const UnixSeconds day_start = config.start_epoch + static_cast<UnixSeconds>(days[static_cast<std::size_t>(t)]) * kSecondsPerDay;
      Trip trip = generate_trip_trace(kind, pid, home, draw_start_time(kind, day_start, rng), ctx, rng);
      fleet.truth.trip_label[trip.trip_id] = kind == TripKind::Delivery ? 1 : 0;
      for (auto& s : trip.samples) fleet.samples.push_back(std::move(s));
    }
  }
  return fleet;
}

void write_samples_jsonl(std::ostream& out, const std::vector<GpsSample>& samples) {
  for (const auto& s : samples) out << ingest::to_json_line(s) << '\n';
}

void write_homes_csv(std::ostream& out, const std::vector<Home>& homes) {
  out << "policy_id,lat,lon\n";
  char buf[64];
  for (const auto& h : homes) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", h.position.lat, h.position.lon);
    out << h.policy_id << buf;
  }
}

std::map<std::string, LatLon> read_homes_csv(std::istream& in) {
  const CsvTable table = CsvTable::read(in);
  const auto pid = table.column("policy_id");
  const auto lat = table.column("lat");
  const auto lon = table.column("lon");
  std::map<std::string, LatLon> homes;
  for (std::size_t r = 0; r < table.rows(); ++r) homes[table.cell(r, pid)] = {table.number(r, lat), table.number(r, lon)};
  return homes;
}

void write_policy_truth_csv(std::ostream& out, const GroundTruth& truth) {
  out << "policy_id,k\n";
  for (const auto& [pid, k] : truth.policy_class) out << pid << ',' << k << '\n';
}

void write_trip_truth_csv(std::ostream& out, const GroundTruth& truth) {
  out << "trip_id,label\n";
  for (const auto& [tid, label] : truth.trip_label) out << tid << ',' << label << '\n';
}

std::map<std::string, int> read_label_csv(std::istream& in, const std::string& id_column,
                                          const std::string& label_column) {
  const CsvTable table = CsvTable::read(in);
  const auto id = table.column(id_column);
  const auto label = table.column(label_column);
  std::map<std::string, int> out;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto v = table.integer(r, label);
    if (v != 0 && v != 1) throw CsvError("label must be 0 or 1");
    out[table.cell(r, id)] = static_cast<int>(v);
  }
  return out;
}

CountProfile generate_count_profile(const CountProfileConfig& config) {
  if (!(config.minority_fraction >= 0.0 && config.minority_fraction <= 1.0)) {
    throw std::invalid_argument("minority_fraction must be in [0, 1]");
  }
  CountProfile out;
  const auto n_minority = static_cast<std::size_t>(std::llround(static_cast<double>(config.n_policies) * config.minority_fraction));
  std::vector<std::size_t> order(config.n_policies);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(config.seed, "count-profile"));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> klass(config.n_policies, 0);
  for (std::size_t i = 0; i < n_minority; ++i) klass[order[i]] = 1;
  std::poisson_distribution<int> extra(config.mean_extra_trips);
  for (std::size_t i = 0; i < config.n_policies; ++i) {
    const int x = config.min_trips + extra(rng);
    const double q = klass[i] ? sample_beta(rng, config.minority_a, config.minority_b)
                              : sample_beta(rng, config.majority_a, config.majority_b);
    const int y = x > 0 ? std::binomial_distribution<int>(x, q)(rng) : 0;
    out.policy_ids.push_back(policy_name(i));
    out.x.push_back(x);
    out.y.push_back(y);
    out.k.push_back(klass[i]);
  }
  return out;
}

}  // namespace telerank::synth
