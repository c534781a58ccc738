#include "telerank/pipeline/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <regex>
#include <system_error>

#include "telerank/util/files.hpp"

namespace telerank::pipeline {
namespace {

namespace fs = std::filesystem;

template <typename T, typename Parse>
std::vector<T> replay(const Journal& journal, bool repair, std::vector<std::string>* warnings, Parse parse) {
  JournalLoad loaded = journal.load(repair);
  if (!loaded.warning.empty() && warnings) warnings->push_back(loaded.warning);
  std::vector<T> out;
  out.reserve(loaded.records.size());
  for (const auto& r : loaded.records) out.push_back(parse(r));
  return out;
}

bool is_date(const std::string& s) {
  static const std::regex re(R"(\d{4}-\d{2}-\d{2})");
  return std::regex_match(s, re);
}

}  // namespace

StoreLock::StoreLock(const fs::path& store_dir) : path_(store_dir / "lock") {
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw StoreBusy("store is locked (" + path_.string() +
                      " exists); another update is running or a previous one crashed");
    }
    throw std::system_error(errno, std::generic_category(), "create " + path_.string());
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

StoreLock::~StoreLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

Store::Store(fs::path root, Mode mode) : root_(std::move(root)), mode_(mode) {
  if (mode_ == Mode::ReadWrite) {
    fs::create_directories(root_ / "rankings");
    fs::create_directories(root_ / "models");
  } else if (!fs::is_directory(root_)) {
    throw std::runtime_error("store directory " + root_.string() + " does not exist");
  }
}

std::vector<TripRecord> Store::load_trips(std::vector<std::string>* warnings) const {
  return replay<TripRecord>(trips_journal(), mode_ == Mode::ReadWrite, warnings, [](const nlohmann::json& j) { return TripRecord::from_json(j); });
}

std::vector<PredictionRecord> Store::load_predictions(std::vector<std::string>* warnings) const {
  return replay<PredictionRecord>(predictions_journal(), mode_ == Mode::ReadWrite, warnings,
                                  [](const nlohmann::json& j) { return PredictionRecord::from_json(j); });
}

std::vector<ReviewDecision> Store::load_reviews(std::vector<std::string>* warnings) const {
  return replay<ReviewDecision>(reviews_journal(), mode_ == Mode::ReadWrite, warnings,
                                [](const nlohmann::json& j) { return ReviewDecision::from_json(j); });
}

StoreState Store::load() const {
  StoreState s;
  s.trips = load_trips(&s.warnings);
  s.predictions = load_predictions(&s.warnings);
  s.reviews = load_reviews(&s.warnings);
  return s;
}

void Store::append_trips(const std::vector<TripRecord>& trips) const {
  std::vector<nlohmann::json> rows;
  rows.reserve(trips.size());
  for (const auto& t : trips) rows.push_back(t.to_json());
  trips_journal().append_all(rows);
}

void Store::append_predictions(const std::vector<PredictionRecord>& predictions) const {
  std::vector<nlohmann::json> rows;
  rows.reserve(predictions.size());
  for (const auto& p : predictions) rows.push_back(p.to_json());
  predictions_journal().append_all(rows);
}

void Store::append_review(const ReviewDecision& review) const { reviews_journal().append(review.to_json()); }

std::vector<std::string> Store::model_versions(const std::string& prefix) const {
  std::vector<std::string> out;
  if (!fs::is_directory(root_ / "models")) return out;
  for (const auto& entry : fs::directory_iterator(root_ / "models")) {
    const std::string name = entry.path().filename().string();
    if (name.size() > prefix.size() + 5 && name.starts_with(prefix) && name.ends_with(".json")) {
      out.push_back(name.substr(prefix.size(), name.size() - prefix.size() - 5));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string Store::install_tripclf(const tripclf::ForestModel& model) const {
  int next = 1;
  for (const auto& v : model_versions("tripclf-")) {
    try {
      next = std::max(next, std::stoi(v) + 1);
    } catch (const std::exception&) {
    }
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", next);
  write_file_atomic(root_ / "models" / ("tripclf-" + std::string(buf) + ".json"), model.to_json().dump() + "\n");
  return buf;
}

std::optional<std::pair<std::string, tripclf::ForestModel>> Store::latest_tripclf() const {
  const auto versions = model_versions("tripclf-");
  if (versions.empty()) return std::nullopt;
  const std::string& v = versions.back();
  const auto text = read_file(root_ / "models" / ("tripclf-" + v + ".json"));
  return std::make_pair(v, tripclf::ForestModel::from_json(nlohmann::json::parse(text)));
}

nlohmann::json mixture_artifact_json(const MixtureArtifact& artifact) {
  nlohmann::json j = artifact.samples.to_json();
  j["score_table"] = artifact.table.to_json();
  return j;
}

MixtureArtifact mixture_artifact_from_json(const nlohmann::json& j, std::string version) {
  MixtureArtifact a;
  a.version = std::move(version);
  a.samples = betamix::PosteriorSamples::from_json(j);
  a.table = j.contains("score_table") ? betamix::ScoreTable::from_json(j.at("score_table"))
                                      : betamix::score_table(a.samples, kScoreTableMax, kScoreTableMax);
  return a;
}

void Store::save_mixture(const MixtureArtifact& artifact) const {
  if (!is_date(artifact.version)) throw std::invalid_argument("mixture version must be a YYYY-MM-DD date");
  write_file_atomic(root_ / "models" / ("betamix-" + artifact.version + ".json"),
                    mixture_artifact_json(artifact).dump() + "\n");
}

std::optional<MixtureArtifact> Store::latest_mixture(const std::string& max_version) const {
  auto versions = model_versions("betamix-");
  std::erase_if(versions, [&](const std::string& v) { return !is_date(v) || (!max_version.empty() && v > max_version); });
  if (versions.empty()) return std::nullopt;
  const std::string& v = versions.back();
  const auto text = read_file(root_ / "models" / ("betamix-" + v + ".json"));
  return mixture_artifact_from_json(nlohmann::json::parse(text), v);
}

fs::path Store::ranking_path(const std::string& date) const { return root_ / "rankings" / (date + ".json"); }

void Store::write_ranking(const RankingSnapshot& snapshot) const {
  if (!is_date(snapshot.date)) throw std::invalid_argument("snapshot date must be YYYY-MM-DD");
  write_file_atomic(ranking_path(snapshot.date), snapshot.serialize());
}

std::optional<RankingSnapshot> Store::read_ranking(const std::string& date) const {
  if (!is_date(date)) return std::nullopt;
  const auto path = ranking_path(date);
  if (!fs::exists(path)) return std::nullopt;
  return RankingSnapshot::from_json(nlohmann::json::parse(read_file(path)));
}

std::vector<std::string> Store::ranking_dates() const {
  std::vector<std::string> out;
  if (!fs::is_directory(root_ / "rankings")) return out;
  for (const auto& entry : fs::directory_iterator(root_ / "rankings")) {
    const auto p = entry.path();
    if (p.extension() == ".json" && is_date(p.stem().string())) out.push_back(p.stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace telerank::pipeline
