#include "telerank/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace telerank::ingest {

using nlohmann::json;

std::string_view to_string(EngineStatus s) noexcept {
  switch (s) {
    case EngineStatus::On:
      return "on";
    case EngineStatus::Off:
      return "off";
    case EngineStatus::Running:
      return "running";
  }
  return "running";
}

std::optional<EngineStatus> engine_status_from_string(std::string_view s) noexcept {
  if (s == "on") return EngineStatus::On;
  if (s == "off") return EngineStatus::Off;
  if (s == "running") return EngineStatus::Running;
  return std::nullopt;
}

std::string_view to_string(IssueKind k) noexcept {
  switch (k) {
    case IssueKind::DuplicateTimestamp:
      return "duplicate_timestamp";
    case IssueKind::NonMonotoneTime:
      return "non_monotone_time";
    case IssueKind::Teleportation:
      return "teleportation";
  }
  return "unknown";
}

std::size_t ParseResult::sample_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, group] : by_policy) n += group.size();
  return n;
}

namespace {

double require_number(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing key '") + key + "'");
  if (!it->is_number()) throw std::invalid_argument(std::string("'") + key + "' is not a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw std::invalid_argument(std::string("'") + key + "' is not finite");
  return v;
}

}  // namespace

GpsSample parse_sample_line(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw std::invalid_argument("record is not a JSON object");

  GpsSample s;
  const auto pid = obj.find("policy_id");
  if (pid == obj.end() || !pid->is_string()) throw std::invalid_argument("missing or non-string 'policy_id'");
  s.policy_id = pid->get<std::string>();
  if (s.policy_id.empty()) throw std::invalid_argument("empty 'policy_id'");

  if (const auto tid = obj.find("trip_id"); tid != obj.end() && !tid->is_null()) {
    if (!tid->is_string()) throw std::invalid_argument("'trip_id' is not a string");
    s.trip_id = tid->get<std::string>();
  }

  s.latitude = require_number(obj, "lat");
  s.longitude = require_number(obj, "lon");
  if (s.latitude < -90.0 || s.latitude > 90.0) {
    throw std::invalid_argument("latitude out of range [-90, 90]: " + std::to_string(s.latitude));
  }
  if (s.longitude < -180.0 || s.longitude > 180.0) {
    throw std::invalid_argument("longitude out of range [-180, 180]: " + std::to_string(s.longitude));
  }

  const auto ts = obj.find("ts");
  if (ts == obj.end()) throw std::invalid_argument("missing key 'ts'");
  if (!ts->is_number_integer()) throw std::invalid_argument("'ts' is not an integer");
  s.timestamp = ts->get<std::int64_t>();

  const auto engine = obj.find("engine");
  if (engine == obj.end() || !engine->is_string()) throw std::invalid_argument("missing or non-string 'engine'");
  const auto status = engine_status_from_string(engine->get_ref<const std::string&>());
  if (!status) throw std::invalid_argument("unknown engine status '" + engine->get<std::string>() + "'");
  s.engine = *status;

  if (const auto accel = obj.find("accel"); accel != obj.end() && !accel->is_null()) {
    if (!accel->is_array() || accel->size() != 3) throw std::invalid_argument("'accel' must be an array of 3 numbers");
    std::array<double, 3> a{};
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(*accel)[i].is_number()) throw std::invalid_argument("'accel' must be an array of 3 numbers");
      a[i] = (*accel)[i].get<double>();
    }
    s.accel = a;
  }
  return s;
}

std::string to_json_line(const GpsSample& s) {
  json obj = json::object();
  obj["policy_id"] = s.policy_id;
  if (s.trip_id) obj["trip_id"] = *s.trip_id;
  obj["lat"] = s.latitude;
  obj["lon"] = s.longitude;
  obj["ts"] = s.timestamp;
  obj["engine"] = std::string(to_string(s.engine));
  if (s.accel) obj["accel"] = *s.accel;
  return obj.dump();
}

ParseResult parse_samples(std::istream& in, bool strict) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      GpsSample s = parse_sample_line(line);
      result.by_policy[s.policy_id].push_back(std::move(s));
    } catch (const std::invalid_argument& e) {
      if (strict) throw ParseError(line_no, e.what());
      result.errors.push_back({line_no, e.what()});
    }
  }
  if (in.bad()) throw std::runtime_error("I/O failure while reading samples");
  for (auto& [_, group] : result.by_policy) {
    std::stable_sort(group.begin(), group.end(),
                     [](const GpsSample& a, const GpsSample& b) { return a.timestamp < b.timestamp; });
  }
  return result;
}

std::string make_trip_id(std::string_view policy_id, UnixSeconds start_time) {
  return std::string(policy_id) + "-" + std::to_string(start_time);
}

std::vector<Trip> segment_trips(std::span<const GpsSample> samples, double idle_window_minutes) {
  if (!(idle_window_minutes > 0.0)) throw std::invalid_argument("idle window must be positive");
  const double window_s = idle_window_minutes * 60.0;
  std::vector<Trip> trips;
  std::size_t begin = 0;
  auto flush = [&](std::size_t end) {
    Trip trip;
    trip.policy_id = samples[begin].policy_id;
    trip.start_time = samples[begin].timestamp;
    trip.end_time = samples[end - 1].timestamp;
    trip.trip_id = make_trip_id(trip.policy_id, trip.start_time);
    trip.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(begin),
                        samples.begin() + static_cast<std::ptrdiff_t>(end));
    for (auto& s : trip.samples) s.trip_id = trip.trip_id;
    trips.push_back(std::move(trip));
  };
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double gap = static_cast<double>(samples[i].timestamp - samples[i - 1].timestamp);
    if (gap > window_s) {
      flush(i);
      begin = i;
    }
  }
  if (!samples.empty()) flush(samples.size());
  return trips;
}

std::vector<ValidationIssue> validate_trip(const Trip& trip, double max_speed_mps) {
  std::vector<ValidationIssue> issues;
  for (std::size_t i = 1; i < trip.samples.size(); ++i) {
    const GpsSample& prev = trip.samples[i - 1];
    const GpsSample& cur = trip.samples[i];
    const auto dt = cur.timestamp - prev.timestamp;
    if (dt == 0) {
      issues.push_back({IssueKind::DuplicateTimestamp, i, 0.0});
      continue;
    }
    if (dt < 0) {
      issues.push_back({IssueKind::NonMonotoneTime, i, static_cast<double>(dt)});
      continue;
    }
    const double speed = geo::haversine_m(prev.position(), cur.position()) / static_cast<double>(dt);
    if (speed > max_speed_mps) issues.push_back({IssueKind::Teleportation, i, speed});
  }
  return issues;
}

}  // namespace telerank::ingest
