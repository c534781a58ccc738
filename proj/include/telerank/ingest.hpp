#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "telerank/geo.hpp"
#include "telerank/util/time.hpp"

namespace telerank::ingest {

enum class EngineStatus { On, Off, Running };

std::string_view to_string(EngineStatus s) noexcept;
std::optional<EngineStatus> engine_status_from_string(std::string_view s) noexcept;

struct GpsSample {
  std::string policy_id;
  std::optional<std::string> trip_id;
  double latitude = 0.0;
  double longitude = 0.0;
  UnixSeconds timestamp = 0;
  EngineStatus engine = EngineStatus::Running;
  std::optional<std::array<double, 3>> accel;

  geo::LatLon position() const noexcept { return {latitude, longitude}; }
  friend bool operator==(const GpsSample&, const GpsSample&) = default;
};

struct Trip {
  std::string trip_id;
  std::string policy_id;
  std::vector<GpsSample> samples;
  UnixSeconds start_time = 0;
  UnixSeconds end_time = 0;
};

struct LineError {
  std::size_t line = 0;
  std::string message;
};

struct ParseResult {
  // Keyed by policy_id; each group stably sorted by timestamp.
  std::map<std::string, std::vector<GpsSample>> by_policy;
  std::vector<LineError> errors;

  std::size_t sample_count() const noexcept;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Parses one JSON-lines record. Throws std::invalid_argument describing the
// first problem (missing key, wrong type, coordinate out of range).
GpsSample parse_sample_line(std::string_view line);

std::string to_json_line(const GpsSample& s);

// Reads a JSON-lines sample stream. Malformed lines are collected in
// `errors` unless `strict`, in which case the first one throws ParseError.
// Blank lines are skipped.
ParseResult parse_samples(std::istream& in, bool strict = false);

inline constexpr double kDefaultIdleWindowMinutes = 90.0;

std::string make_trip_id(std::string_view policy_id, UnixSeconds start_time);

// Splits one policy's time-ordered samples wherever the gap between
// consecutive timestamps exceeds the idle window. Samples are copied into
// the trips with trip_id filled in.
std::vector<Trip> segment_trips(std::span<const GpsSample> samples,
                                double idle_window_minutes = kDefaultIdleWindowMinutes);

enum class IssueKind { DuplicateTimestamp, NonMonotoneTime, Teleportation };

std::string_view to_string(IssueKind k) noexcept;

struct ValidationIssue {
  IssueKind kind;
  std::size_t index = 0;  // index of the later sample of the offending pair
  double value = 0.0;     // implied speed (m/s) or time delta (s)
};

inline constexpr double kTeleportSpeedMps = 70.0;

std::vector<ValidationIssue> validate_trip(const Trip& trip, double max_speed_mps = kTeleportSpeedMps);

}  // namespace telerank::ingest
