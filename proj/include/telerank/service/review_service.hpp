#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "telerank/pipeline/records.hpp"
#include "telerank/pipeline/store.hpp"

namespace telerank::service {

// Carries the HTTP status and a short machine-readable code.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }

 private:
  int status_;
  std::string code_;
};

struct RankingQuery {
  long page = 1;  // 1-based
  long page_size = 50;
  std::optional<double> min_score;
  bool unreviewed_only = false;
};

struct RankingPage {
  std::string date;
  std::size_t total = 0;  // rows after filtering
  long page = 1;
  long page_size = 50;
  std::vector<pipeline::RankedPolicy> rows;

  nlohmann::json to_json() const;
};

struct ReviewStats {
  std::size_t reviews = 0;             // journal records
  std::size_t reviewed_policies = 0;   // distinct policies
  std::size_t confirmed = 0;           // latest verdict CONFIRMED_DELIVERY
  std::size_t not_delivery = 0;
  double confirmed_rate = 0.0;         // confirmed / reviewed_policies
  std::size_t ranked_policies = 0;     // in the newest snapshot
  std::string latest_snapshot;

  nlohmann::json to_json() const;
};

// Read model over a store directory. Journals and snapshots are re-read
// when they change on disk, so a running service sees weekly updates without
// a restart. Thread-safe; review writes are serialized.
class ReviewService {
 public:
  explicit ReviewService(std::filesystem::path store_dir);

  std::vector<std::string> snapshot_dates();

  // Throws ApiError 404 for an unknown date. `date` may be "latest".
  RankingPage rank_policies(const std::string& date, const RankingQuery& query);

  nlohmann::json policy_detail(const std::string& policy_id, const std::string& date = "latest");
  nlohmann::json trip_detail(const std::string& policy_id, const std::string& trip_id);

  // Rejects unknown policies (404) and empty reviewer names (400).
  pipeline::ReviewDecision record_review(const pipeline::ReviewDecision& decision);
  std::vector<pipeline::ReviewDecision> review_history(const std::string& policy_id);

  nlohmann::json score_table(const std::string& date = "latest");
  ReviewStats stats();

 private:
  struct SnapshotEntry {
    std::filesystem::file_time_type mtime;
    std::uintmax_t size = 0;
    pipeline::RankingSnapshot snapshot;
  };

  void refresh();
  const pipeline::RankingSnapshot& snapshot_for(const std::string& date);
  std::optional<pipeline::ReviewDecision> last_review(const std::string& policy_id) const;

  pipeline::Store store_;
  std::mutex mutex_;
  std::uint64_t trips_bytes_ = UINT64_MAX;
  std::uint64_t predictions_bytes_ = UINT64_MAX;
  std::uint64_t reviews_bytes_ = UINT64_MAX;
  std::vector<pipeline::TripRecord> trips_;
  std::unordered_map<std::string, std::vector<std::size_t>> trips_by_policy_;
  std::unordered_map<std::string, std::size_t> trip_index_;
  std::unordered_map<std::string, pipeline::PredictionRecord> predictions_;  // latest per trip
  std::vector<pipeline::ReviewDecision> reviews_;
  std::map<std::string, SnapshotEntry> snapshots_;
  std::set<std::string> known_policies_;
  std::map<std::string, pipeline::MixtureArtifact> mixtures_;
};

}  // namespace telerank::service
