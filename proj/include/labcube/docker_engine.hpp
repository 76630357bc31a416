#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "labcube/engine.hpp"

namespace labcube::docker {

inline constexpr std::string_view kApiVersion = "v1.43";

struct Request {
  std::string method;  // GET, POST, DELETE
  std::string path;    // includes the API version prefix and query string
  std::optional<nlohmann::json> body;
  // Status codes that count as success besides 2xx (e.g. 304 for a no-op start).
  std::vector<int> tolerated;

  bool operator==(const Request&) const = default;
};

// HTTP requests equivalent to one engine action. Transfer and compose actions
// are not engine requests and throw SchemaError. Relative mount sources are
// resolved against `deploy_root`.
std::vector<Request> translate(const EngineAction& action, std::string_view deploy_root = {});

// Engine list/inspect state to our enum:
//   created -> CREATING, restarting -> STARTING,
//   running -> RUNNING (STARTING while the health check reports "starting"),
//   exited / dead -> EXITED(code), anything else -> MISSING.
ContainerState map_state(std::string_view state, std::string_view health = {});

// Translates GET /containers/json entries into statuses.
std::vector<ContainerStatus> parse_container_list(const nlohmann::json& list, const std::string& host);

// Splits a multiplexed log stream (8-byte frame headers: stream id, 3 zero
// bytes, big-endian length) into lines. A trailing partial frame is left in
// `buffer`.
std::vector<std::pair<LogChannel, std::string>> demux_logs(std::string& buffer);

// Maps an HTTP status of a failed request to an engine error.
EngineError error_for_status(int status, const std::string& ref, const std::string& message);

// Remote channel commands for "ssh://[user@]host[:port]".
struct SshTarget {
  std::string destination;  // [user@]host
  std::optional<int> port;
};
SshTarget parse_ssh_address(std::string_view address);
// Writes stdin to <remote_dir>/<path>, creating parent directories.
std::vector<std::string> ssh_write_file_argv(const SshTarget& target, std::string_view remote_dir,
                                             std::string_view path);
// Runs `docker compose up -d` with the fragment (read from stdin) in <remote_dir>.
std::vector<std::string> ssh_compose_up_argv(const SshTarget& target, std::string_view remote_dir,
                                             std::string_view project);

inline constexpr std::string_view kRemoteDir = "labcube";

// Container engine reached over its HTTP API on a unix socket or TCP.
class DockerEngine final : public Engine {
 public:
  DockerEngine(EngineEndpoint endpoint, std::string deploy_root);

  const EngineEndpoint& endpoint() const override { return endpoint_; }
  EngineResult apply(const EngineAction& action) override;
  std::vector<ContainerStatus> query_containers(std::string_view stack) const override;
  std::vector<std::string> query_networks(std::string_view stack) const override;
  void stream_logs(std::string_view container, bool follow, const LogSink& sink,
                   std::stop_token stop) const override;

 private:
  EngineEndpoint endpoint_;
  std::string deploy_root_;

  struct Response {
    int status = 0;
    std::string body;
  };
  Response send(const Request& request) const;
};

// Remote channel over ssh, run as child processes.
class SshChannel final : public RemoteChannel {
 public:
  explicit SshChannel(EngineEndpoint endpoint);

  const EngineEndpoint& endpoint() const override { return endpoint_; }
  EngineResult transfer(const std::vector<TransferFile>& files) override;
  EngineResult compose_up(const ComposeFragment& fragment) override;

 private:
  EngineEndpoint endpoint_;
  SshTarget target_;
};

// Runs argv with `input` on stdin; returns (exit status, combined output).
std::pair<int, std::string> run_process(const std::vector<std::string>& argv, std::string_view input);

}  // namespace labcube::docker
