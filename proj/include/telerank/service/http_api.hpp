#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "telerank/service/review_service.hpp"

namespace httplib {
class Server;
}

namespace telerank::service {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

using QueryParams = std::multimap<std::string, std::string>;

// Transport-independent router for the /api endpoints. `path` is already
// percent-decoded. Errors come back as {code, message} bodies.
ApiResponse handle_api(ReviewService& service, const std::string& method, const std::string& path,
                       const QueryParams& params, const std::string& body);

// Wires handle_api into an httplib server and, when given, serves the UI
// bundle from `static_dir` at "/".
void register_routes(httplib::Server& server, ReviewService& service,
                     const std::optional<std::filesystem::path>& static_dir = std::nullopt);

}  // namespace telerank::service
