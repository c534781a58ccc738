#include "telerank/service/http_api.hpp"

#include <chrono>
#include <charconv>
#include <regex>

#include "httplib.h"

namespace telerank::service {
namespace {

ApiResponse error(int status, const std::string& code, const std::string& message) {
  return {status, {{"code", code}, {"message", message}}};
}

std::optional<std::string> param(const QueryParams& params, const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end()) return std::nullopt;
  return it->second;
}

long parse_long(const std::string& key, const std::string& text) {
  long v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ApiError(400, "bad_parameter", key + " must be an integer");
  return v;
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ApiError(400, "bad_parameter", key + " must be a number");
  }
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0" || text.empty()) return false;
  throw ApiError(400, "bad_parameter", key + " must be true or false");
}

RankingQuery ranking_query(const QueryParams& params) {
  RankingQuery q;
  if (auto v = param(params, "page")) q.page = parse_long("page", *v);
  if (auto v = param(params, "page_size")) q.page_size = parse_long("page_size", *v);
  if (auto v = param(params, "min_score")) q.min_score = parse_double("min_score", *v);
  if (auto v = param(params, "unreviewed_only")) q.unreviewed_only = parse_bool("unreviewed_only", *v);
  return q;
}

pipeline::ReviewDecision review_from_body(const std::string& policy_id, const std::string& body) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ApiError(400, "bad_json", "request body must be a JSON object");
  if (j.contains("policy_id") && j.at("policy_id") != policy_id) {
    throw ApiError(400, "invalid_review", "policy_id in body does not match the URL");
  }
  j["policy_id"] = policy_id;
  if (!j.contains("timestamp") || j.at("timestamp").is_null()) {
    j["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
  }
  if (!j.contains("verdict")) throw ApiError(400, "invalid_review", "verdict is required");
  try {
    return pipeline::ReviewDecision::from_json(j);
  } catch (const std::exception& e) {
    throw ApiError(400, "invalid_review", e.what());
  }
}

ApiResponse route(ReviewService& service, const std::string& method, const std::string& path,
                  const QueryParams& params, const std::string& body) {
  static const std::regex rankings_re(R"(^/api/rankings/?$)");
  static const std::regex ranking_re(R"(^/api/rankings/([^/]+)$)");
  static const std::regex policy_re(R"(^/api/policies/([^/]+)$)");
  static const std::regex trip_re(R"(^/api/policies/([^/]+)/trips/([^/]+)$)");
  static const std::regex review_re(R"(^/api/policies/([^/]+)/review$)");
  std::smatch m;

  const bool get = method == "GET";
  const bool post = method == "POST";
  if (std::regex_match(path, rankings_re)) {
    if (!get) return error(405, "method_not_allowed", "use GET");
    const auto dates = service.snapshot_dates();
    return {200, {{"dates", dates}, {"latest", dates.empty() ? nlohmann::json(nullptr) : nlohmann::json(dates.back())}}};
  }
  if (std::regex_match(path, m, ranking_re)) {
    if (!get) return error(405, "method_not_allowed", "use GET");
    return {200, service.rank_policies(m[1].str(), ranking_query(params)).to_json()};
  }
  if (std::regex_match(path, m, trip_re)) {
    if (!get) return error(405, "method_not_allowed", "use GET");
    return {200, service.trip_detail(m[1].str(), m[2].str())};
  }
  if (std::regex_match(path, m, review_re)) {
    if (!post) return error(405, "method_not_allowed", "use POST");
    const auto saved = service.record_review(review_from_body(m[1].str(), body));
    return {201, saved.to_json()};
  }
  if (std::regex_match(path, m, policy_re)) {
    if (!get) return error(405, "method_not_allowed", "use GET");
    return {200, service.policy_detail(m[1].str(), param(params, "date").value_or("latest"))};
  }
  if (path == "/api/score-table") {
    if (!get) return error(405, "method_not_allowed", "use GET");
    return {200, service.score_table(param(params, "date").value_or("latest"))};
  }
  if (path == "/api/stats") {
    if (!get) return error(405, "method_not_allowed", "use GET");
    return {200, service.stats().to_json()};
  }
  return error(404, "not_found", "no endpoint at " + path);
}

}  // namespace

ApiResponse handle_api(ReviewService& service, const std::string& method, const std::string& path,
                       const QueryParams& params, const std::string& body) {
  try {
    return route(service, method, path, params, body);
  } catch (const ApiError& e) {
    return error(e.status(), e.code(), e.what());
  } catch (const std::exception& e) {
    return error(500, "internal", e.what());
  }
}

void register_routes(httplib::Server& server, ReviewService& service,
                     const std::optional<std::filesystem::path>& static_dir) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    QueryParams params(req.params.begin(), req.params.end());
    const ApiResponse r = handle_api(service, req.method, req.path, params, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(R"(/api/.*)", handler);
  server.Post(R"(/api/.*)", handler);
  server.Put(R"(/api/.*)", handler);
  server.Delete(R"(/api/.*)", handler);
  if (static_dir) server.set_mount_point("/", static_dir->string());
}

}  // namespace telerank::service
