#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "labcube/hosts.hpp"
#include "labcube/ipv4.hpp"
#include "labcube/netplan.hpp"
#include "labcube/stack_model.hpp"

namespace labcube {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

inline std::int64_t to_millis(Timestamp ts) { return ts.time_since_epoch().count(); }
inline Timestamp from_millis(std::int64_t ms) { return Timestamp(std::chrono::milliseconds(ms)); }

// Engine-wide container name for a stack service.
std::string container_name(std::string_view stack, std::string_view service);

inline constexpr std::string_view kDefaultBridge = "bridge";

struct Mount {
  std::string source;  // relative to the deployment directory
  std::string target;  // path inside the container

  bool operator==(const Mount&) const = default;
};

struct ContainerDescriptor {
  std::string name;
  std::string stack;
  std::string service;
  std::string image;
  ServiceRole role = ServiceRole::CoreNf;
  std::optional<std::string> command;
  std::vector<Mount> mounts;

  bool operator==(const ContainerDescriptor&) const = default;
};

struct TransferFile {
  std::string path;  // relative to the remote deployment directory
  std::string content;

  bool operator==(const TransferFile&) const = default;
};

// Compose document executed on a RAN host, named by `id`.
struct ComposeFragment {
  std::string id;
  std::string document;

  bool operator==(const ComposeFragment&) const = default;
};

namespace action {

struct CreateNetwork {
  NetworkSpec spec;
  std::string stack;
  bool operator==(const CreateNetwork&) const = default;
};
struct RemoveNetwork {
  std::string network;
  bool operator==(const RemoveNetwork&) const = default;
};
struct CreateContainer {
  ContainerDescriptor container;
  bool operator==(const CreateContainer&) const = default;
};
struct ConnectNetwork {
  std::string container;
  std::string network;
  std::optional<Ipv4Address> ip;
  std::optional<std::string> mac;
  bool operator==(const ConnectNetwork&) const = default;
};
struct DisconnectNetwork {
  std::string container;
  std::string network;
  bool operator==(const DisconnectNetwork&) const = default;
};
struct StartContainer {
  std::string container;
  bool operator==(const StartContainer&) const = default;
};
struct StopContainer {
  std::string container;
  bool operator==(const StopContainer&) const = default;
};
struct RemoveContainer {
  std::string container;
  bool operator==(const RemoveContainer&) const = default;
};
struct Exec {
  std::string container;
  std::string command;
  bool operator==(const Exec&) const = default;
};
struct TransferFiles {
  std::string host;
  std::vector<TransferFile> files;
  bool operator==(const TransferFiles&) const = default;
};
struct RemoteComposeUp {
  std::string host;
  ComposeFragment fragment;
  bool operator==(const RemoteComposeUp&) const = default;
};

}  // namespace action

using EngineAction =
    std::variant<action::CreateNetwork, action::RemoveNetwork, action::CreateContainer,
                 action::ConnectNetwork, action::DisconnectNetwork, action::StartContainer,
                 action::StopContainer, action::RemoveContainer, action::Exec,
                 action::TransferFiles, action::RemoteComposeUp>;

std::string_view action_name(const EngineAction& action);
// Container, network, host or fragment the action refers to.
std::string action_subject(const EngineAction& action);
// Throws SchemaError when a container/network reference is empty.
void check_action(const EngineAction& action);

// Hash over the sorted (path, content) pairs of a file set.
std::string file_set_hash(const std::vector<TransferFile>& files);

nlohmann::json action_to_json(const EngineAction& action);

struct EngineResult {
  std::string output;
};

enum class ContainerState { Creating, Starting, Running, Exited, Missing };

std::string to_string(ContainerState state);

struct ContainerStatus {
  std::string service;
  std::string container;
  std::string stack;
  std::string host;
  ContainerState state = ContainerState::Missing;
  std::optional<int> exit_code;      // set only for Exited
  std::optional<Timestamp> since;    // unset for Missing

  bool operator==(const ContainerStatus&) const = default;
};

ContainerStatus missing_status(std::string service, std::string stack, std::string host);

enum class LogChannel { Out, Err };
enum class LogEventKind { Line, End, Gap };

std::string to_string(LogChannel channel);
std::string to_string(LogEventKind kind);

struct LogEvent {
  Timestamp ts{};
  std::string service;
  std::string container;
  std::string line;
  LogChannel channel = LogChannel::Out;
  LogEventKind kind = LogEventKind::Line;
  std::size_t dropped = 0;  // Gap events only

  bool operator==(const LogEvent&) const = default;
};

// Returns false to stop the stream.
using LogSink = std::function<bool(const LogEvent&)>;

class Engine {
 public:
  virtual ~Engine() = default;

  virtual const EngineEndpoint& endpoint() const = 0;
  virtual EngineResult apply(const EngineAction& action) = 0;
  // Containers labelled with the stack; all containers for an empty filter.
  virtual std::vector<ContainerStatus> query_containers(std::string_view stack) const = 0;
  virtual std::vector<std::string> query_networks(std::string_view stack) const = 0;
  // Delivers the container's log in order. With `follow`, keeps delivering
  // until the container exits (then an End event) or `stop` is requested.
  virtual void stream_logs(std::string_view container, bool follow, const LogSink& sink,
                           std::stop_token stop) const = 0;
};

class RemoteChannel {
 public:
  virtual ~RemoteChannel() = default;

  virtual const EngineEndpoint& endpoint() const = 0;
  virtual EngineResult transfer(const std::vector<TransferFile>& files) = 0;
  virtual EngineResult compose_up(const ComposeFragment& fragment) = 0;
};

// Engines and remote channels by host name.
class EnginePool {
 public:
  void add_engine(const std::string& host, std::shared_ptr<Engine> engine);
  void add_channel(const std::string& host, std::shared_ptr<RemoteChannel> channel);

  // Throws EngineError(Unreachable) for unknown hosts.
  Engine& engine(std::string_view host) const;
  RemoteChannel& channel(std::string_view host) const;
  bool has_engine(std::string_view host) const;
  std::vector<std::string> hosts() const;

  // One poll interval: advances the simulated clock or waits in real time.
  void set_ticker(std::function<void()> ticker) { ticker_ = std::move(ticker); }
  void tick() const;
  // Lab time; the system clock unless replaced.
  void set_clock(std::function<Timestamp()> clock) { clock_ = std::move(clock); }
  Timestamp now() const;

 private:
  std::map<std::string, std::shared_ptr<Engine>, std::less<>> engines_;
  std::map<std::string, std::shared_ptr<RemoteChannel>, std::less<>> channels_;
  std::function<void()> ticker_;
  std::function<Timestamp()> clock_;
};

// Routes transfer/compose actions to the host's remote channel and every
// other action to its engine.
EngineResult apply_engine_action(const EnginePool& pool, std::string_view host,
                                 const EngineAction& action);

std::vector<ContainerStatus> query_container_states(const EnginePool& pool, std::string_view host,
                                                    std::string_view stack);

// Collects a non-following log stream.
std::vector<LogEvent> stream_container_logs(const EnginePool& pool, std::string_view host,
                                            std::string_view container);
void stream_container_logs(const EnginePool& pool, std::string_view host,
                           std::string_view container, bool follow, const LogSink& sink,
                           std::stop_token stop = {});

// Transfers the files (skipped when empty) and brings the fragment up.
EngineResult remote_transfer_and_up(const EnginePool& pool, std::string_view host,
                                    const std::vector<TransferFile>& files,
                                    const ComposeFragment& fragment);

}  // namespace labcube
