#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "telerank/betamix/fit.hpp"
#include "telerank/ingest.hpp"
#include "telerank/pipeline/records.hpp"
#include "telerank/pipeline/store.hpp"
#include "telerank/poi_database.hpp"

namespace telerank::pipeline {

class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IngestOptions {
  double idle_window_minutes = ingest::kDefaultIdleWindowMinutes;
  long utc_offset_s = 0;
};

struct IngestReport {
  std::size_t samples = 0;
  std::size_t trips_added = 0;
  std::size_t trips_already_stored = 0;
  std::size_t trips_with_issues = 0;
  std::vector<std::string> policies_without_home;  // skipped entirely
};

// Segments each policy's samples into trips, extracts features and appends
// trips not yet in the store. Takes the store lock.
IngestReport ingest_to_store(const Store& store, const ingest::ParseResult& parsed, const geo::PoiDatabase& pois,
                             const std::map<std::string, geo::LatLon>& homes, const IngestOptions& options = {});

// Per-policy (x, y) over trips ending in (window_end - days, window_end].
// When a trip was predicted more than once the last record wins. Policies
// without trips in the window are omitted; output is sorted by policy_id.
std::vector<betamix::PolicyCounts> aggregate_counts(std::span<const PredictionRecord> predictions,
                                                    UnixSeconds window_end, int window_days = 30);

// Scores and orders counts: score desc, then y desc, then policy_id asc.
std::vector<RankedPolicy> rank_counts(std::span<const betamix::PolicyCounts> counts,
                                      const betamix::PosteriorSamples& samples, UnixSeconds window_start,
                                      UnixSeconds window_end);

struct UpdateOptions {
  UnixSeconds now = 0;
  int window_days = 30;
  // Reuse the newest stored mixture fit instead of refitting on this window.
  bool freeze_mixture = false;
  betamix::Hyperpriors priors;
  betamix::HmcConfig hmc;
};

struct UpdateResult {
  RankingSnapshot snapshot;
  std::size_t new_predictions = 0;
  bool refit = false;
  std::vector<std::string> warnings;
};

// Classifies unscored trips, aggregates the window ending at `now`, fits or
// reuses the mixture, and writes rankings/<date of now>.json. Takes the
// store lock; throws StoreBusy if another writer holds it.
UpdateResult run_weekly_update(const Store& store, const UpdateOptions& options);

}  // namespace telerank::pipeline
