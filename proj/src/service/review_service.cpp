#include "telerank/service/review_service.hpp"

#include <algorithm>


namespace telerank::service {
namespace {

namespace fs = std::filesystem;

nlohmann::json stop_json(const pipeline::StopRecord& s) {
  return {{"lat", s.center.lat},
          {"lon", s.center.lon},
          {"start", format_iso8601(s.start_time)},
          {"end", format_iso8601(s.end_time)},
          {"duration_s", s.duration_s},
          {"classification", geo::to_string(s.classification)}};
}

}  // namespace

nlohmann::json RankingPage::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) rows_json.push_back(r.to_json());
  return {{"date", date}, {"total", total}, {"page", page}, {"page_size", page_size}, {"rows", rows_json}};
}

nlohmann::json ReviewStats::to_json() const {
  return {{"reviews", reviews},
          {"reviewed_policies", reviewed_policies},
          {"confirmed", confirmed},
          {"not_delivery", not_delivery},
          {"confirmed_rate", confirmed_rate},
          {"ranked_policies", ranked_policies},
          {"latest_snapshot", latest_snapshot.empty() ? nlohmann::json(nullptr) : nlohmann::json(latest_snapshot)}};
}

ReviewService::ReviewService(fs::path store_dir) : store_(std::move(store_dir), pipeline::Store::Mode::ReadOnly) {}

void ReviewService::refresh() {
  const auto tb = store_.trips_journal().size_bytes();
  if (tb != trips_bytes_) {
    trips_ = store_.load_trips();
    trips_by_policy_.clear();
    trip_index_.clear();
    for (std::size_t i = 0; i < trips_.size(); ++i) {
      trips_by_policy_[trips_[i].policy_id].push_back(i);
      trip_index_[trips_[i].trip_id] = i;
    }
    trips_bytes_ = tb;
  }
  const auto pb = store_.predictions_journal().size_bytes();
  if (pb != predictions_bytes_) {
    predictions_.clear();
    for (auto& p : store_.load_predictions()) predictions_[p.trip_id] = std::move(p);
    predictions_bytes_ = pb;
  }
  const auto rb = store_.reviews_journal().size_bytes();
  if (rb != reviews_bytes_) {
    reviews_ = store_.load_reviews();
    reviews_bytes_ = rb;
  }

  bool changed = false;
  const auto dates = store_.ranking_dates();
  for (auto it = snapshots_.begin(); it != snapshots_.end();) {
    if (!std::binary_search(dates.begin(), dates.end(), it->first)) {
      it = snapshots_.erase(it);
      changed = true;
    } else {
      ++it;
    }
  }
  for (const auto& d : dates) {
    const auto path = store_.ranking_path(d);
    std::error_code ec;
    const auto mtime = fs::last_write_time(path, ec);
    const auto size = fs::file_size(path, ec);
    if (ec) continue;
    auto it = snapshots_.find(d);
    if (it != snapshots_.end() && it->second.mtime == mtime && it->second.size == size) continue;
    auto snap = store_.read_ranking(d);
    if (!snap) continue;
    snapshots_[d] = SnapshotEntry{mtime, size, std::move(*snap)};
    changed = true;
  }
  if (changed) {
    known_policies_.clear();
    for (const auto& [d, e] : snapshots_) {
      for (const auto& p : e.snapshot.policies) known_policies_.insert(p.policy_id);
    }
  }
}

const pipeline::RankingSnapshot& ReviewService::snapshot_for(const std::string& date) {
  if (date == "latest") {
    if (snapshots_.empty()) throw ApiError(404, "no_snapshot", "no ranking snapshots in the store");
    return snapshots_.rbegin()->second.snapshot;
  }
  const auto it = snapshots_.find(date);
  if (it == snapshots_.end()) throw ApiError(404, "unknown_snapshot", "no ranking snapshot for " + date);
  return it->second.snapshot;
}

std::optional<pipeline::ReviewDecision> ReviewService::last_review(const std::string& policy_id) const {
  for (auto it = reviews_.rbegin(); it != reviews_.rend(); ++it) {
    if (it->policy_id == policy_id) return *it;
  }
  return std::nullopt;
}

std::vector<std::string> ReviewService::snapshot_dates() {
  std::lock_guard lock(mutex_);
  refresh();
  std::vector<std::string> out;
  for (const auto& [d, e] : snapshots_) out.push_back(d);
  return out;
}

RankingPage ReviewService::rank_policies(const std::string& date, const RankingQuery& query) {
  std::lock_guard lock(mutex_);
  refresh();
  const auto& snap = snapshot_for(date);

  std::unordered_map<std::string, const pipeline::ReviewDecision*> latest;
  for (const auto& r : reviews_) latest[r.policy_id] = &r;

  std::vector<pipeline::RankedPolicy> filtered;
  for (const auto& p : snap.policies) {
    if (query.min_score && p.score < *query.min_score) continue;
    const auto rv = latest.find(p.policy_id);
    const bool reviewed = rv != latest.end();
    if (query.unreviewed_only && reviewed) continue;
    auto row = p;
    if (reviewed) row.last_review = *rv->second;
    filtered.push_back(std::move(row));
  }

  RankingPage page;
  page.date = snap.date;
  page.total = filtered.size();
  page.page = query.page;
  page.page_size = query.page_size;
  if (query.page < 1 || query.page_size < 1) return page;
  const auto begin = static_cast<std::size_t>(query.page - 1) * static_cast<std::size_t>(query.page_size);
  if (begin >= filtered.size()) return page;
  const auto end = std::min(filtered.size(), begin + static_cast<std::size_t>(query.page_size));
  page.rows.assign(filtered.begin() + static_cast<std::ptrdiff_t>(begin),
                   filtered.begin() + static_cast<std::ptrdiff_t>(end));
  return page;
}

nlohmann::json ReviewService::policy_detail(const std::string& policy_id, const std::string& date) {
  std::lock_guard lock(mutex_);
  refresh();
  const bool has_trips = trips_by_policy_.contains(policy_id);
  if (!known_policies_.contains(policy_id) && !has_trips) {
    throw ApiError(404, "unknown_policy", "policy " + policy_id + " is not in the store");
  }

  nlohmann::json out;
  out["policy_id"] = policy_id;
  out["snapshot"] = nullptr;
  out["ranking"] = nullptr;
  out["rank"] = nullptr;

  std::optional<std::pair<UnixSeconds, UnixSeconds>> window;
  if (!snapshots_.empty()) {
    const auto& snap = snapshot_for(date);
    out["snapshot"] = snap.date;
    window = std::make_pair(snap.window_start, snap.window_end);
    for (std::size_t i = 0; i < snap.policies.size(); ++i) {
      if (snap.policies[i].policy_id == policy_id) {
        out["ranking"] = snap.policies[i].to_json();
        out["rank"] = i + 1;
        break;
      }
    }
  }

  nlohmann::json trips = nlohmann::json::array();
  if (has_trips) {
    for (std::size_t idx : trips_by_policy_.at(policy_id)) {
      const auto& t = trips_[idx];
      if (window && (t.end_time <= window->first || t.end_time > window->second)) continue;
      nlohmann::json row = {{"trip_id", t.trip_id},
                            {"start", format_iso8601(t.start_time)},
                            {"end", format_iso8601(t.end_time)},
                            {"features", pipeline::features_to_json(t.features)},
                            {"stops", t.stops.size()},
                            {"issues", t.issues}};
      const auto pred = predictions_.find(t.trip_id);
      row["probability"] = pred == predictions_.end() ? nlohmann::json(nullptr) : nlohmann::json(pred->second.probability);
      row["label"] = pred == predictions_.end() ? nlohmann::json(nullptr) : nlohmann::json(pred->second.label);
      trips.push_back(std::move(row));
    }
  }
  out["trips"] = std::move(trips);

  nlohmann::json history = nlohmann::json::array();
  for (const auto& r : reviews_) {
    if (r.policy_id == policy_id) history.push_back(r.to_json());
  }
  out["reviews"] = std::move(history);
  const auto last = last_review(policy_id);
  out["last_review"] = last ? last->to_json() : nlohmann::json(nullptr);
  return out;
}

nlohmann::json ReviewService::trip_detail(const std::string& policy_id, const std::string& trip_id) {
  std::lock_guard lock(mutex_);
  refresh();
  const auto it = trip_index_.find(trip_id);
  if (it == trip_index_.end() || trips_[it->second].policy_id != policy_id) {
    throw ApiError(404, "unknown_trip", "trip " + trip_id + " not found for policy " + policy_id);
  }
  const auto& t = trips_[it->second];
  nlohmann::json stops = nlohmann::json::array();
  for (const auto& s : t.stops) stops.push_back(stop_json(s));
  nlohmann::json line = nlohmann::json::array();
  for (const auto& p : t.polyline) line.push_back({p.lat, p.lon});
  nlohmann::json out = {{"trip_id", t.trip_id},
                        {"policy_id", t.policy_id},
                        {"start", format_iso8601(t.start_time)},
                        {"end", format_iso8601(t.end_time)},
                        {"features", pipeline::features_to_json(t.features)},
                        {"stops", stops},
                        {"polyline", line}};
  const auto pred = predictions_.find(t.trip_id);
  if (pred == predictions_.end()) {
    out["prediction"] = nullptr;
  } else {
    out["prediction"] = {{"probability", pred->second.probability},
                         {"label", pred->second.label},
                         {"model", pred->second.model}};
  }
  return out;
}

pipeline::ReviewDecision ReviewService::record_review(const pipeline::ReviewDecision& decision) {
  std::lock_guard lock(mutex_);
  refresh();
  if (decision.reviewer.empty()) throw ApiError(400, "invalid_review", "reviewer must not be empty");
  if (!known_policies_.contains(decision.policy_id)) {
    throw ApiError(404, "unknown_policy", "policy " + decision.policy_id + " does not appear in any ranking");
  }
  store_.append_review(decision);
  reviews_.push_back(decision);
  reviews_bytes_ = store_.reviews_journal().size_bytes();
  return decision;
}

std::vector<pipeline::ReviewDecision> ReviewService::review_history(const std::string& policy_id) {
  std::lock_guard lock(mutex_);
  refresh();
  std::vector<pipeline::ReviewDecision> out;
  for (const auto& r : reviews_) {
    if (r.policy_id == policy_id) out.push_back(r);
  }
  return out;
}

nlohmann::json ReviewService::score_table(const std::string& date) {
  std::lock_guard lock(mutex_);
  refresh();
  const auto& snap = snapshot_for(date);
  if (snap.betamix_version.empty()) throw ApiError(404, "no_mixture", "snapshot " + snap.date + " has no mixture fit");
  auto it = mixtures_.find(snap.betamix_version);
  if (it == mixtures_.end()) {
    auto artifact = store_.latest_mixture(snap.betamix_version);
    if (!artifact || artifact->version != snap.betamix_version) {
      throw ApiError(404, "no_mixture", "mixture fit " + snap.betamix_version + " is missing from the store");
    }
    it = mixtures_.emplace(snap.betamix_version, std::move(*artifact)).first;
  }
  nlohmann::json out = it->second.table.to_json();
  out["snapshot"] = snap.date;
  out["betamix_version"] = snap.betamix_version;
  return out;
}

ReviewStats ReviewService::stats() {
  std::lock_guard lock(mutex_);
  refresh();
  ReviewStats s;
  s.reviews = reviews_.size();
  std::map<std::string, pipeline::Verdict> latest;
  for (const auto& r : reviews_) latest[r.policy_id] = r.verdict;
  s.reviewed_policies = latest.size();
  for (const auto& [id, v] : latest) {
    if (v == pipeline::Verdict::ConfirmedDelivery) {
      ++s.confirmed;
    } else {
      ++s.not_delivery;
    }
  }
  s.confirmed_rate = s.reviewed_policies ? static_cast<double>(s.confirmed) / static_cast<double>(s.reviewed_policies) : 0.0;
  if (!snapshots_.empty()) {
    s.latest_snapshot = snapshots_.rbegin()->first;
    s.ranked_policies = snapshots_.rbegin()->second.snapshot.policies.size();
  }
  return s;
}

}  // namespace telerank::service
