#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "telerank/geo.hpp"
#include "telerank/ingest.hpp"
#include "telerank/trip_features.hpp"
#include "telerank/util/time.hpp"

namespace telerank::pipeline {

struct StopRecord {
  geo::LatLon center;
  UnixSeconds start_time = 0;
  UnixSeconds end_time = 0;
  double duration_s = 0.0;
  geo::Destination classification = geo::Destination::Residential;
  friend bool operator==(const StopRecord&, const StopRecord&) = default;
};

// What the store keeps of an ingested trip: features, classified stops and a
// decimated polyline for display. Raw samples are not retained.
struct TripRecord {
  std::string trip_id;
  std::string policy_id;
  UnixSeconds start_time = 0;
  UnixSeconds end_time = 0;
  std::size_t sample_count = 0;
  std::size_t issues = 0;  // validator findings
  geo::TripFeatures features;
  std::vector<StopRecord> stops;
  std::vector<geo::LatLon> polyline;

  nlohmann::json to_json() const;
  static TripRecord from_json(const nlohmann::json& j);
  friend bool operator==(const TripRecord&, const TripRecord&) = default;
};

inline constexpr std::size_t kMaxPolylinePoints = 64;

TripRecord make_trip_record(const ingest::Trip& trip, const geo::TripAnalysis& analysis, std::size_t issues = 0,
                            std::size_t max_polyline_points = kMaxPolylinePoints);

struct PredictionRecord {
  std::string trip_id;
  std::string policy_id;
  UnixSeconds trip_end_time = 0;
  int label = 0;
  double probability = 0.0;
  std::string model;  // classifier version that produced it

  bool valid() const noexcept;
  nlohmann::json to_json() const;
  // Throws std::invalid_argument on missing fields or invariant violations.
  static PredictionRecord from_json(const nlohmann::json& j);
  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

enum class Verdict { ConfirmedDelivery, NotDelivery };

std::string_view to_string(Verdict v) noexcept;
std::optional<Verdict> verdict_from_string(std::string_view s) noexcept;

struct ReviewDecision {
  std::string policy_id;
  Verdict verdict = Verdict::NotDelivery;
  std::string reviewer;
  UnixSeconds timestamp = 0;
  std::optional<std::string> note;

  nlohmann::json to_json() const;
  static ReviewDecision from_json(const nlohmann::json& j);
  friend bool operator==(const ReviewDecision&, const ReviewDecision&) = default;
};

struct RankedPolicy {
  std::string policy_id;
  int x = 0;
  int y = 0;
  double posterior_probability = 0.0;
  double score = 0.0;
  UnixSeconds window_start = 0;
  UnixSeconds window_end = 0;
  std::optional<ReviewDecision> last_review;

  nlohmann::json to_json() const;
};

// One dated ranking. Reviews are deliberately not part of it, so rerunning
// an update for the same instant reproduces the file byte for byte.
struct RankingSnapshot {
  static constexpr int kSchemaVersion = 1;

  std::string date;  // YYYY-MM-DD of `now`
  UnixSeconds now = 0;
  int window_days = 30;
  UnixSeconds window_start = 0;
  UnixSeconds window_end = 0;
  std::string tripclf_version;
  std::string betamix_version;
  bool mixture_frozen = false;
  double anchor = 0.0;
  std::vector<RankedPolicy> policies;

  nlohmann::json to_json() const;
  static RankingSnapshot from_json(const nlohmann::json& j);
  std::string serialize() const;
};

nlohmann::json features_to_json(const geo::TripFeatures& f);
geo::TripFeatures features_from_json(const nlohmann::json& j);

}  // namespace telerank::pipeline
