#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "labcube/engine.hpp"
#include "labcube/hosts.hpp"
#include "labcube/netplan.hpp"
#include "labcube/render.hpp"
#include "labcube/settings.hpp"
#include "labcube/stack_model.hpp"
#include "labcube/subscribers.hpp"

namespace labcube {

struct HostAction {
  std::string host;
  EngineAction action;

  bool operator==(const HostAction&) const = default;
};

struct DeploymentPlan {
  std::string stack;
  std::vector<HostAction> actions;
  SeedSet seed;

  bool operator==(const DeploymentPlan&) const = default;
};

// Exec command that replaces the subscriber database with the seed set.
std::string seed_command(const SeedSet& seeds);

// Compose fragment that brings a delegated service up on its RAN host.
ComposeFragment make_compose_fragment(const StackManifest& manifest, const ServiceSpec& service,
                                      const NetworkCatalog& networks, const AddressPlan& addresses,
                                      const std::vector<RenderedConfig>& rendered);

// Actions that finish a RAN service's deployment once its container exists and
// holds its attachments on the controller. Local target: one StartContainer.
// Remote target: DisconnectNetwork per attachment in manifest order and
// ConnectNetwork(bridge) on the controller, then TransferFiles and
// RemoteComposeUp on the target host. Throws UnknownHost.
std::vector<HostAction> delegate_ran_service(const StackManifest& manifest, const ServiceSpec& service,
                                             const HostRegistry& hosts, const NetworkCatalog& networks,
                                             const AddressPlan& addresses,
                                             const std::vector<RenderedConfig>& rendered);

// CreateNetwork per declared network, then per service in dependency order:
// CreateContainer, ConnectNetwork per attachment and StartContainer (or the
// delegation sequence). The seed Exec follows the first DB service's start.
// Throws CycleError, UnknownHost, PlanningError.
DeploymentPlan plan_deployment(const StackManifest& manifest, const ResolvedSettings& settings,
                               const NetworkCatalog& networks, const HostRegistry& hosts,
                               const SeedSet& seeds, const std::vector<RenderedConfig>& rendered);

enum class SessionState { Starting, Running, Stopping, Stopped, Failed };
enum class StartPolicy { RejectIfActive, ReplaceActive };

std::string to_string(SessionState state);
std::string to_string(StartPolicy policy);
std::optional<StartPolicy> parse_start_policy(std::string_view text);

inline bool is_active(SessionState s) {
  return s == SessionState::Starting || s == SessionState::Running || s == SessionState::Stopping;
}

struct StackSession {
  std::string id;
  std::string stack;
  SessionState state = SessionState::Starting;
  Timestamp started_at{};
  StackManifest manifest;
  DeploymentPlan plan;
  std::optional<std::string> failure;
  std::size_t planned = 0;  // survives persistence, unlike plan
  std::size_t applied = 0;  // plan actions executed successfully

  // Host each service's container runs on.
  std::string service_host(const ServiceSpec& service, const HostRegistry& hosts) const;
};

// Everything a start needs, checked before the engine is touched.
struct PreparedStack {
  StackManifest manifest;
  ResolvedSettings settings;
  std::vector<RenderedConfig> rendered;
  SeedSet seeds;
  DeploymentPlan plan;
};

struct LabEnvironment {
  std::filesystem::path template_root;
  NetworkCatalog networks;
  HostRegistry hosts;
  std::vector<SubscriberRecord> subscribers;
};

// Runs lifecycle commands one at a time on a worker thread. Reads (sessions,
// settings, catalog) never wait for a running command.
class Orchestrator {
 public:
  struct Options {
    // Poll ticks allowed for readiness; unset means service count + 2.
    std::optional<int> readiness_ticks;
  };

  Orchestrator(StackCatalog catalog, SettingsMap global, LabEnvironment env, EnginePool pool,
               Options options);
  Orchestrator(StackCatalog catalog, SettingsMap global, LabEnvironment env, EnginePool pool)
      : Orchestrator(std::move(catalog), std::move(global), std::move(env), std::move(pool), Options{}) {}
  ~Orchestrator();

  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  // Validate, render, seed and plan. Throws UnknownStack or ValidationFailed.
  PreparedStack prepare(const std::string& stack, bool emulated = false) const;
  // Findings of prepare(); empty when the stack is
  // ready to start. Throws UnknownStack.
  ValidationReport validate(const std::string& stack, bool emulated = false) const;

  struct Ticket {
    StackSession admitted;
    std::shared_future<StackSession> done;
  };

  // Returns once the command is admitted. Admission errors (UnknownStack,
  // ValidationFailed, StackAlreadyActive) are thrown here; with
  // ReplaceActive the predecessor is stopped before admission completes.
  Ticket submit_start(const std::string& stack, StartPolicy policy, bool emulated = false);
  // Throws NoActiveSession when no session was ever started.
  Ticket submit_stop();

  // Synchronous forms; an engine failure is rethrown after the session is
  // marked FAILED.
  StackSession start_stack(const std::string& stack, StartPolicy policy, bool emulated = false);
  StackSession stop_stack();

  // Most recent session, if any.
  std::optional<StackSession> current_session() const;
  std::vector<StackSession> sessions() const;
  // Adopts a session recorded by an earlier process (CLI state file).
  void restore_session(StackSession session);

  SettingsMap settings() const;
  // Serialized with lifecycle commands. Throws SettingsLocked while a
  // session is active, ValidationFailed for invalid identity settings.
  void put_settings(SettingsMap settings);
  void set_settings_sink(std::function<void(const SettingsMap&)> sink);

  const StackCatalog& catalog() const { return catalog_; }
  const LabEnvironment& environment() const { return env_; }
  const EnginePool& pool() const { return pool_; }

  // Test hooks: called on the worker thread before each engine action and
  // after each session transition.
  void set_action_observer(std::function<void(const HostAction&)> observer);
  void set_session_observer(std::function<void(const std::vector<StackSession>&)> observer);

 private:
  using Task = std::function<void()>;

  void enqueue(Task task);
  void run_worker(std::stop_token stop);

  StackSession do_start(const PreparedStack& prepared, const std::string& id);
  StackSession do_stop(const std::string& id);
  void update_session(const std::string& id, const std::function<void(StackSession&)>& change);
  std::optional<std::string> latest_id_locked() const;
  void apply(const HostAction& action);

  StackCatalog catalog_;
  LabEnvironment env_;
  EnginePool pool_;
  Options options_;

  mutable std::mutex mutex_;
  SettingsMap global_;
  std::map<std::string, StackSession> sessions_;
  std::vector<std::string> order_;  // session ids, oldest first
  std::size_t next_id_ = 1;
  std::function<void(const SettingsMap&)> settings_sink_;
  std::function<void(const HostAction&)> action_observer_;
  std::function<void(const std::vector<StackSession>&)> session_observer_;

  std::mutex queue_mutex_;
  std::condition_variable_any queue_cv_;
  std::deque<Task> queue_;
  std::jthread worker_;
};

}  // namespace labcube
