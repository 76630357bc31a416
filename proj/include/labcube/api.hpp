#pragma once

#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "labcube/lab.hpp"
#include "labcube/report.hpp"

namespace labcube::api {

struct ApiError {
  std::string code;
  std::string message;
  int http_status = 500;
  std::optional<ValidationReport> report;  // VALIDATION_FAILED only
};

// Every code the API emits on purpose, with its status. Anything else is an
// INTERNAL_ERROR (500) and indicates a bug.
struct ErrorCode {
  std::string_view code;
  int http_status;
};
const std::vector<ErrorCode>& closed_error_set();

ApiError to_api_error(const std::exception& error);

// {"error": {code, message, http_status}, "report": [...]?}
nlohmann::json error_body(const ApiError& error);

// One server-sent event: "event: <name>\ndata: <json>\n\n".
std::string sse_event(std::string_view event, const nlohmann::json& data);

// HTTP front end over a loaded lab. Handlers run concurrently; lifecycle
// requests go through the orchestrator queue and answer 202 once admitted.
class ApiServer {
 public:
  explicit ApiServer(LabContext& lab);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port; the
  // bound port is returned. Throws IoError when binding fails.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  void serve(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace labcube::api
