#include "telerank/pipeline/weekly_update.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "telerank/trip_features.hpp"
#include "telerank/tripclf/forest.hpp"

namespace telerank::pipeline {

IngestReport ingest_to_store(const Store& store, const ingest::ParseResult& parsed, const geo::PoiDatabase& pois,
                             const std::map<std::string, geo::LatLon>& homes, const IngestOptions& options) {
  StoreLock lock(store.root());
  IngestReport report;
  report.samples = parsed.sample_count();

  std::unordered_set<std::string> known;
  for (const auto& t : store.load_trips()) known.insert(t.trip_id);

  for (const auto& [policy, samples] : parsed.by_policy) {
    const auto home = homes.find(policy);
    if (home == homes.end()) {
      report.policies_without_home.push_back(policy);
      continue;
    }
    std::vector<TripRecord> batch;
    for (const auto& trip : ingest::segment_trips(samples, options.idle_window_minutes)) {
      if (!known.insert(trip.trip_id).second) {
        ++report.trips_already_stored;
        continue;
      }
      const std::size_t issues = ingest::validate_trip(trip).size();
      if (issues > 0) ++report.trips_with_issues;
      const auto analysis = geo::analyze_trip(trip, pois, home->second, options.utc_offset_s);
      batch.push_back(make_trip_record(trip, analysis, issues));
    }
    report.trips_added += batch.size();
    store.append_trips(batch);
  }
  return report;
}

std::vector<betamix::PolicyCounts> aggregate_counts(std::span<const PredictionRecord> predictions,
                                                    UnixSeconds window_end, int window_days) {
  if (window_days <= 0) throw std::invalid_argument("window_days must be positive");
  const UnixSeconds window_start = window_end - static_cast<UnixSeconds>(window_days) * kSecondsPerDay;

  std::unordered_map<std::string_view, const PredictionRecord*> latest;
  latest.reserve(predictions.size());
  for (const auto& p : predictions) latest[p.trip_id] = &p;

  std::map<std::string, betamix::PolicyCounts> by_policy;
  for (const auto& [trip, p] : latest) {
    if (p->trip_end_time <= window_start || p->trip_end_time > window_end) continue;
    auto& c = by_policy[p->policy_id];
    c.policy_id = p->policy_id;
    ++c.x;
    if (p->label == 1) ++c.y;
  }
  std::vector<betamix::PolicyCounts> out;
  out.reserve(by_policy.size());
  for (auto& [id, c] : by_policy) out.push_back(std::move(c));
  return out;
}

std::vector<RankedPolicy> rank_counts(std::span<const betamix::PolicyCounts> counts,
                                      const betamix::PosteriorSamples& samples, UnixSeconds window_start,
                                      UnixSeconds window_end) {
  std::vector<RankedPolicy> out;
  if (counts.empty()) return out;
  const double anchor = betamix::score_anchor(samples);
  std::map<std::pair<int, int>, std::pair<double, double>> cache;
  out.reserve(counts.size());
  for (const auto& c : counts) {
    auto it = cache.find({c.x, c.y});
    if (it == cache.end()) {
      const double p = betamix::posterior_predictive(c.x, c.y, samples);
      it = cache.emplace(std::make_pair(c.x, c.y), std::make_pair(p, betamix::priority_score(p, anchor))).first;
    }
    RankedPolicy r;
    r.policy_id = c.policy_id;
    r.x = c.x;
    r.y = c.y;
    r.posterior_probability = it->second.first;
    r.score = it->second.second;
    r.window_start = window_start;
    r.window_end = window_end;
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const RankedPolicy& a, const RankedPolicy& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y > b.y;
    return a.policy_id < b.policy_id;
  });
  return out;
}

UpdateResult run_weekly_update(const Store& store, const UpdateOptions& options) {
  if (options.window_days <= 0) throw std::invalid_argument("window_days must be positive");
  StoreLock lock(store.root());
  UpdateResult result;

  const auto trips = store.load_trips(&result.warnings);
  auto predictions = store.load_predictions(&result.warnings);

  std::unordered_set<std::string> scored;
  for (const auto& p : predictions) scored.insert(p.trip_id);
  std::vector<const TripRecord*> pending;
  for (const auto& t : trips) {
    if (!scored.contains(t.trip_id)) pending.push_back(&t);
  }

  const auto classifier = store.latest_tripclf();
  if (!pending.empty()) {
    if (!classifier) throw MissingArtifact("no trip classifier installed in " + store.root().string());
    std::vector<PredictionRecord> fresh;
    fresh.reserve(pending.size());
    for (const TripRecord* t : pending) {
      const auto pred = tripclf::predict_trip(classifier->second, t->features);
      fresh.push_back({t->trip_id, t->policy_id, t->end_time, pred.label, pred.probability, classifier->first});
    }
    store.append_predictions(fresh);
    result.new_predictions = fresh.size();
    predictions.insert(predictions.end(), fresh.begin(), fresh.end());
  }

  RankingSnapshot& snap = result.snapshot;
  snap.date = format_date(options.now);
  snap.now = options.now;
  snap.window_days = options.window_days;
  snap.window_end = options.now;
  snap.window_start = options.now - static_cast<UnixSeconds>(options.window_days) * kSecondsPerDay;
  snap.tripclf_version = classifier ? classifier->first : "";
  snap.mixture_frozen = options.freeze_mixture;

  const auto counts = aggregate_counts(predictions, options.now, options.window_days);

  std::optional<MixtureArtifact> mixture;
  if (options.freeze_mixture) {
    mixture = store.latest_mixture(snap.date);
    if (!mixture) throw MissingArtifact("freeze requested but no mixture fit dated on or before " + snap.date);
  } else if (!counts.empty()) {
    MixtureArtifact fit;
    fit.version = snap.date;
    fit.samples = betamix::hmc_sample(counts, options.priors, options.hmc);
    fit.table = betamix::score_table(fit.samples, kScoreTableMax, kScoreTableMax);
    store.save_mixture(fit);
    mixture = std::move(fit);
    result.refit = true;
  }

  if (mixture) {
    snap.betamix_version = mixture->version;
    snap.anchor = betamix::score_anchor(mixture->samples);
    snap.policies = rank_counts(counts, mixture->samples, snap.window_start, snap.window_end);
  }
  store.write_ranking(snap);
  return result;
}

}  // namespace telerank::pipeline
