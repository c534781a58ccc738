#include "telerank/pipeline/records.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace telerank::pipeline {

nlohmann::json features_to_json(const geo::TripFeatures& f) {
  nlohmann::json j = nlohmann::json::object();
  const auto values = f.as_array();
  for (std::size_t i = 0; i < geo::kFeatureCount; ++i) j[std::string(geo::kFeatureNames[i])] = values[i];
  return j;
}

geo::TripFeatures features_from_json(const nlohmann::json& j) {
  std::array<double, geo::kFeatureCount> values{};
  for (std::size_t i = 0; i < geo::kFeatureCount; ++i) values[i] = j.at(std::string(geo::kFeatureNames[i])).get<double>();
  return geo::TripFeatures::from_array(values);
}

nlohmann::json TripRecord::to_json() const {
  nlohmann::json stops_json = nlohmann::json::array();
  for (const auto& s : stops) {
    stops_json.push_back({{"lat", s.center.lat},
                          {"lon", s.center.lon},
                          {"start", s.start_time},
                          {"end", s.end_time},
                          {"duration_s", s.duration_s},
                          {"class", geo::to_string(s.classification)}});
  }
  nlohmann::json line = nlohmann::json::array();
  for (const auto& p : polyline) line.push_back({p.lat, p.lon});
  return {{"trip_id", trip_id},   {"policy_id", policy_id},      {"start", start_time},
          {"end", end_time},      {"samples", sample_count},     {"issues", issues},
          {"features", features_to_json(features)}, {"stops", stops_json}, {"polyline", line}};
}

TripRecord TripRecord::from_json(const nlohmann::json& j) {
  TripRecord t;
  t.trip_id = j.at("trip_id").get<std::string>();
  t.policy_id = j.at("policy_id").get<std::string>();
  t.start_time = j.at("start").get<UnixSeconds>();
  t.end_time = j.at("end").get<UnixSeconds>();
  t.sample_count = j.value("samples", std::size_t{0});
  t.issues = j.value("issues", std::size_t{0});
  t.features = features_from_json(j.at("features"));
  for (const auto& s : j.at("stops")) {
    t.stops.push_back({{s.at("lat").get<double>(), s.at("lon").get<double>()},
                       s.at("start").get<UnixSeconds>(),
                       s.at("end").get<UnixSeconds>(),
                       s.at("duration_s").get<double>(),
                       geo::destination_from_string(s.at("class").get<std::string>())});
  }
  for (const auto& p : j.at("polyline")) t.polyline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return t;
}

TripRecord make_trip_record(const ingest::Trip& trip, const geo::TripAnalysis& analysis, std::size_t issues,
                            std::size_t max_polyline_points) {
  TripRecord r;
  r.trip_id = trip.trip_id;
  r.policy_id = trip.policy_id;
  r.start_time = trip.start_time;
  r.end_time = trip.end_time;
  r.sample_count = trip.samples.size();
  r.issues = issues;
  r.features = analysis.features;
  for (const auto& s : analysis.stops) {
    r.stops.push_back({s.center, s.start_time, s.end_time, s.duration_s, s.classification});
  }
  const std::size_t n = trip.samples.size();
  if (n > 0) {
    const std::size_t cap = std::max<std::size_t>(2, max_polyline_points);
    const std::size_t stride = n <= cap ? 1 : (n + cap - 2) / (cap - 1);
    for (std::size_t i = 0; i < n; i += stride) r.polyline.push_back(trip.samples[i].position());
    if ((n - 1) % stride != 0) r.polyline.push_back(trip.samples.back().position());
  }
  return r;
}

bool PredictionRecord::valid() const noexcept {
  return !trip_id.empty() && !policy_id.empty() && (label == 0 || label == 1) && probability >= 0.0 &&
         probability <= 1.0;
}

nlohmann::json PredictionRecord::to_json() const {
  return {{"trip_id", trip_id}, {"policy_id", policy_id}, {"trip_end_time", trip_end_time},
          {"label", label},     {"probability", probability}, {"model", model}};
}

PredictionRecord PredictionRecord::from_json(const nlohmann::json& j) {
  PredictionRecord p;
  try {
    p.trip_id = j.at("trip_id").get<std::string>();
    p.policy_id = j.at("policy_id").get<std::string>();
    p.trip_end_time = j.at("trip_end_time").get<UnixSeconds>();
    p.label = j.at("label").get<int>();
    p.probability = j.at("probability").get<double>();
    p.model = j.value("model", "");
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad prediction record: ") + e.what());
  }
  if (!p.valid()) throw std::invalid_argument("prediction record violates label/probability bounds");
  return p;
}

std::string_view to_string(Verdict v) noexcept {
  return v == Verdict::ConfirmedDelivery ? "CONFIRMED_DELIVERY" : "NOT_DELIVERY";
}

std::optional<Verdict> verdict_from_string(std::string_view s) noexcept {
  if (s == "CONFIRMED_DELIVERY") return Verdict::ConfirmedDelivery;
  if (s == "NOT_DELIVERY") return Verdict::NotDelivery;
  return std::nullopt;
}

nlohmann::json ReviewDecision::to_json() const {
  nlohmann::json j = {{"policy_id", policy_id},
                      {"verdict", to_string(verdict)},
                      {"reviewer", reviewer},
                      {"timestamp", format_iso8601(timestamp)}};
  if (note) j["note"] = *note;
  return j;
}

ReviewDecision ReviewDecision::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("review must be a JSON object");
  ReviewDecision d;
  try {
    d.policy_id = j.at("policy_id").get<std::string>();
    const auto v = verdict_from_string(j.at("verdict").get<std::string>());
    if (!v) throw std::invalid_argument("verdict must be CONFIRMED_DELIVERY or NOT_DELIVERY");
    d.verdict = *v;
    d.reviewer = j.value("reviewer", "");
    const auto& ts = j.at("timestamp");
    d.timestamp = ts.is_string() ? parse_iso8601(ts.get<std::string>()) : ts.get<UnixSeconds>();
    if (j.contains("note") && !j.at("note").is_null()) d.note = j.at("note").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad review record: ") + e.what());
  }
  return d;
}

nlohmann::json RankedPolicy::to_json() const {
  nlohmann::json j = {{"policy_id", policy_id},
                      {"x", x},
                      {"y", y},
                      {"posterior_probability", posterior_probability},
                      {"score", score},
                      {"window_start", format_iso8601(window_start)},
                      {"window_end", format_iso8601(window_end)}};
  j["last_review"] = last_review ? last_review->to_json() : nlohmann::json(nullptr);
  return j;
}

nlohmann::json RankingSnapshot::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : policies) {
    rows.push_back({{"policy_id", p.policy_id},
                    {"x", p.x},
                    {"y", p.y},
                    {"posterior_probability", p.posterior_probability},
                    {"score", p.score}});
  }
  return {{"schema", "telerank.ranking"},
          {"version", kSchemaVersion},
          {"date", date},
          {"now", format_iso8601(now)},
          {"window_days", window_days},
          {"window_start", format_iso8601(window_start)},
          {"window_end", format_iso8601(window_end)},
          {"models", {{"tripclf", tripclf_version}, {"betamix", betamix_version}}},
          {"mixture_frozen", mixture_frozen},
          {"anchor", anchor},
          {"policies", rows}};
}

RankingSnapshot RankingSnapshot::from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "telerank.ranking" || j.value("version", 0) != kSchemaVersion) {
    throw std::runtime_error("not a version " + std::to_string(kSchemaVersion) + " ranking snapshot");
  }
  RankingSnapshot s;
  s.date = j.at("date").get<std::string>();
  s.now = parse_iso8601(j.at("now").get<std::string>());
  s.window_days = j.at("window_days").get<int>();
  s.window_start = parse_iso8601(j.at("window_start").get<std::string>());
  s.window_end = parse_iso8601(j.at("window_end").get<std::string>());
  s.tripclf_version = j.at("models").value("tripclf", "");
  s.betamix_version = j.at("models").value("betamix", "");
  s.mixture_frozen = j.value("mixture_frozen", false);
  s.anchor = j.at("anchor").get<double>();
  for (const auto& r : j.at("policies")) {
    RankedPolicy p;
    p.policy_id = r.at("policy_id").get<std::string>();
    p.x = r.at("x").get<int>();
    p.y = r.at("y").get<int>();
    p.posterior_probability = r.at("posterior_probability").get<double>();
    p.score = r.at("score").get<double>();
    p.window_start = s.window_start;
    p.window_end = s.window_end;
    s.policies.push_back(std::move(p));
  }
  return s;
}

std::string RankingSnapshot::serialize() const { return to_json().dump(1) + "\n"; }

}  // namespace telerank::pipeline
