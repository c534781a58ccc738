#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "telerank/betamix/fit.hpp"
#include "telerank/pipeline/journal.hpp"
#include "telerank/pipeline/records.hpp"
#include "telerank/tripclf/forest.hpp"

namespace telerank::pipeline {

class StoreBusy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exclusive writer lock: the `lock` file is created with O_EXCL and removed
// on destruction. A second holder fails immediately instead of waiting.
class StoreLock {
 public:
  explicit StoreLock(const std::filesystem::path& store_dir);
  ~StoreLock();
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

 private:
  std::filesystem::path path_;
};

struct StoreState {
  std::vector<TripRecord> trips;
  std::vector<PredictionRecord> predictions;
  std::vector<ReviewDecision> reviews;
  std::vector<std::string> warnings;
};

struct MixtureArtifact {
  std::string version;
  betamix::PosteriorSamples samples;
  betamix::ScoreTable table;
};

inline constexpr int kScoreTableMax = 50;

// Directory layout:
//   trips.jsonl, predictions.jsonl, reviews.jsonl   append-only journals
//   rankings/<YYYY-MM-DD>.json                       dated snapshots
//   models/tripclf-<NNNN>.json                       installed classifiers
//   models/betamix-<YYYY-MM-DD>.json                 mixture fits
//   lock                                             writer lock
class Store {
 public:
  enum class Mode { ReadWrite, ReadOnly };

  // ReadWrite creates the directory tree if needed and repairs torn journal
  // tails on load; ReadOnly leaves existing files untouched when loading.
  explicit Store(std::filesystem::path root, Mode mode = Mode::ReadWrite);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path lock_path() const { return root_ / "lock"; }

  Journal trips_journal() const { return Journal(root_ / "trips.jsonl"); }
  Journal predictions_journal() const { return Journal(root_ / "predictions.jsonl"); }
  Journal reviews_journal() const { return Journal(root_ / "reviews.jsonl"); }

  std::vector<TripRecord> load_trips(std::vector<std::string>* warnings = nullptr) const;
  std::vector<PredictionRecord> load_predictions(std::vector<std::string>* warnings = nullptr) const;
  std::vector<ReviewDecision> load_reviews(std::vector<std::string>* warnings = nullptr) const;
  StoreState load() const;

  void append_trips(const std::vector<TripRecord>& trips) const;
  void append_predictions(const std::vector<PredictionRecord>& predictions) const;
  void append_review(const ReviewDecision& review) const;

  // Installs a classifier under the next sequence number and returns it.
  std::string install_tripclf(const tripclf::ForestModel& model) const;
  std::optional<std::pair<std::string, tripclf::ForestModel>> latest_tripclf() const;

  void save_mixture(const MixtureArtifact& artifact) const;
  // Newest mixture fit whose version (a date) is <= `max_version`, or the
  // newest overall when `max_version` is empty.
  std::optional<MixtureArtifact> latest_mixture(const std::string& max_version = "") const;

  void write_ranking(const RankingSnapshot& snapshot) const;
  std::optional<RankingSnapshot> read_ranking(const std::string& date) const;
  std::vector<std::string> ranking_dates() const;
  std::filesystem::path ranking_path(const std::string& date) const;

 private:
  std::vector<std::string> model_versions(const std::string& prefix) const;

  std::filesystem::path root_;
  Mode mode_;
};

nlohmann::json mixture_artifact_json(const MixtureArtifact& artifact);
MixtureArtifact mixture_artifact_from_json(const nlohmann::json& j, std::string version);

}  // namespace telerank::pipeline
