#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "labcube/engine.hpp"

namespace labcube {

// In-memory container engines for a set of hosts sharing one clock.
//
// Every host starts with the unlabelled network "bridge". Actions advance the
// clock by 1 ms and a poll tick by 1 s, so identical action sequences give
// identical logs. Volumes are keyed by container name and outlive the
// container, which is what makes subscriber seeding observable across
// restarts.
//
// Exec understands the subscriber database commands
//   subscriber-db replace\n<document>
//   subscriber-db add <line>
//   subscriber-db dump
// and rejects anything else with ENGINE_FAILED.
class SimulatedLab : public std::enable_shared_from_this<SimulatedLab> {
 public:
  static constexpr std::int64_t kEpochMillis = 1735689600000;  // 2025-01-01T00:00:00Z
  static constexpr std::int64_t kTickMillis = 1000;

  static std::shared_ptr<SimulatedLab> create(const std::vector<std::string>& hosts);

  // Engine (and remote channel) for a host; the host is added on first use.
  std::shared_ptr<Engine> engine(const std::string& host);
  std::shared_ptr<RemoteChannel> channel(const std::string& host);
  // Pool with one engine per host and a channel for every host except
  // `controller`; ticks advance this lab.
  EnginePool make_pool(const std::string& controller);

  // STARTING containers become RUNNING.
  void tick();
  Timestamp now() const;

  // All hosts' entries ordered by sequence number.
  nlohmann::json action_log() const;
  nlohmann::json action_log(std::string_view host) const;
  std::size_t action_count() const;

  // Test hooks.
  // Lines are appended to the container's log, or queued until a container
  // with that name is created.
  void script_logs(const std::string& host, const std::string& container,
                   const std::vector<std::string>& lines, LogChannel channel = LogChannel::Out);
  // The container exits with `code` as if its process ended.
  void set_exit(const std::string& host, const std::string& container, int code);
  void set_reachable(const std::string& host, bool reachable);

  struct FailureRule {
    std::string host;
    std::string action;        // action name, e.g. "RemoteComposeUp"
    std::string subject;       // empty matches any subject
    bool after_effect = false; // fail after applying the effect
    int remaining = 1;
  };
  void inject_failure(FailureRule rule);

  std::optional<std::string> volume(const std::string& host, const std::string& container) const;
  void set_volume(const std::string& host, const std::string& container, std::string content);
  // File sets received by a host's remote channel, in arrival order.
  std::vector<std::vector<TransferFile>> transfers(const std::string& host) const;
  std::vector<std::string> network_names(const std::string& host) const;
  struct AttachmentRecord {
    std::string network;
    std::optional<Ipv4Address> ip;
    std::optional<std::string> mac;
  };
  std::vector<AttachmentRecord> attachments(const std::string& host,
                                            const std::string& container) const;

  // Whole-lab state for persistence between CLI invocations.
  nlohmann::json to_json() const;
  static std::shared_ptr<SimulatedLab> from_json(const nlohmann::json& state);

 private:
  friend class SimulatedEngine;

  struct Container {
    ContainerDescriptor descriptor;
    ContainerState state = ContainerState::Creating;
    std::optional<int> exit_code;
    Timestamp since{};
    std::vector<AttachmentRecord> attachments;
    std::vector<LogEvent> logs;
  };
  struct Network {
    NetworkSpec spec;
    std::string stack;  // empty for the built-in bridge
  };
  struct Host {
    bool reachable = true;
    std::map<std::string, Network> networks;
    std::map<std::string, Container> containers;
    std::map<std::string, std::string> volumes;
    std::map<std::string, std::string> received;
    std::vector<std::vector<TransferFile>> transfers;
    std::map<std::string, std::vector<LogEvent>> pending_logs;
  };

  SimulatedLab() = default;

  Host& host_locked(const std::string& name);
  const Host* find_host_locked(std::string_view name) const;
  void check_reachable_locked(const std::string& host) const;
  Timestamp advance_locked(std::int64_t millis);
  void append_log_locked(Container& c, std::string line, LogChannel channel);
  void record_locked(const std::string& host, nlohmann::json entry);
  const FailureRule* take_failure_locked(const std::string& host, std::string_view action,
                                         const std::string& subject, bool after_effect);

  EngineResult apply(const std::string& host, const EngineAction& action);
  EngineResult apply_locked(Host& h, const std::string& host, const EngineAction& action);
  EngineResult transfer(const std::string& host, const std::vector<TransferFile>& files);
  EngineResult compose_up(const std::string& host, const ComposeFragment& fragment);
  void compose_up_locked(Host& h, const std::string& host, const ComposeFragment& fragment);
  std::vector<ContainerStatus> query_containers(const std::string& host, std::string_view stack) const;
  std::vector<std::string> query_networks(const std::string& host, std::string_view stack) const;
  void stream_logs(const std::string& host, std::string_view container, bool follow,
                   const LogSink& sink, std::stop_token stop) const;

  mutable std::mutex mutex_;
  mutable std::condition_variable_any changed_;
  std::int64_t clock_ = kEpochMillis;
  std::uint64_t seq_ = 0;
  std::map<std::string, Host, std::less<>> hosts_;
  std::vector<nlohmann::json> log_;
  std::vector<FailureRule> failures_;
};

// One host's view of a SimulatedLab; serves as both engine and remote channel.
class SimulatedEngine final : public Engine, public RemoteChannel {
 public:
  SimulatedEngine(std::shared_ptr<SimulatedLab> lab, std::string host);

  const EngineEndpoint& endpoint() const override { return endpoint_; }
  EngineResult apply(const EngineAction& action) override;
  std::vector<ContainerStatus> query_containers(std::string_view stack) const override;
  std::vector<std::string> query_networks(std::string_view stack) const override;
  void stream_logs(std::string_view container, bool follow, const LogSink& sink,
                   std::stop_token stop) const override;
  EngineResult transfer(const std::vector<TransferFile>& files) override;
  EngineResult compose_up(const ComposeFragment& fragment) override;

 private:
  std::shared_ptr<SimulatedLab> lab_;
  std::string host_;
  EngineEndpoint endpoint_;
};

}  // namespace labcube
