#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "labcube/engine.hpp"
#include "labcube/orchestrator.hpp"

namespace labcube {

enum class HealthColor { Gray, Green, Yellow, Red };

std::string to_string(HealthColor color);

// RUNNING -> GREEN; CREATING, STARTING -> YELLOW; EXITED(0) of a UTIL service
// -> GREEN; any other EXITED and MISSING -> RED.
HealthColor classify_service(const ContainerStatus& status, ServiceRole role);

// Worst of the colors under RED > YELLOW > GREEN; GRAY entries are ignored and
// an empty list is GRAY.
HealthColor aggregate_health(const std::vector<HealthColor>& colors);

struct ServiceHealth {
  std::string service;
  ContainerStatus status;
  HealthColor color = HealthColor::Gray;
};

struct HealthSnapshot {
  std::string stack;
  std::optional<std::string> session_id;
  std::optional<SessionState> session_state;
  std::vector<ServiceHealth> per_service;  // manifest order
  HealthColor aggregate = HealthColor::Gray;
  Timestamp taken_at{};
};

// Queries every host running a service of the session. Unreachable hosts and
// absent containers report MISSING. No session, or a stopped one, yields an
// empty GRAY snapshot.
HealthSnapshot poll_snapshot(const std::optional<StackSession>& session, const HostRegistry& hosts,
                             const EnginePool& pool);

struct TaggedLogEvent {
  LogEvent event;
  HealthColor color = HealthColor::Gray;
};

// Services of the session matching the filter (all when empty), pointing
// into `session`. Throws NoActiveSession or UnknownService.
std::vector<const ServiceSpec*> select_services(const std::optional<StackSession>& session,
                                                const std::vector<std::string>& filter);

// Non-following merge: every event currently logged by the selected services,
// ordered by timestamp with ties kept in service order.
std::vector<TaggedLogEvent> multiplex_logs(const std::optional<StackSession>& session,
                                           const HostRegistry& hosts, const EnginePool& pool,
                                           const std::vector<std::string>& filter);

// Following merge. One reader thread per service feeds a bounded queue; when
// the queue is full the reader counts dropped lines and later emits a GAP event
// carrying the count instead of blocking. Each service ends with an END event.
class LogSubscription {
 public:
  LogSubscription(const std::optional<StackSession>& session, const HostRegistry& hosts,
                  const EnginePool& pool, const std::vector<std::string>& filter,
                  std::size_t capacity = 4096);
  ~LogSubscription();

  LogSubscription(const LogSubscription&) = delete;
  LogSubscription& operator=(const LogSubscription&) = delete;

  // Next event; nullopt once every service has ended, after `timeout`, or
  // after close().
  std::optional<TaggedLogEvent> next(std::chrono::milliseconds timeout = std::chrono::milliseconds::max());
  bool finished() const;
  void close();

 private:
  struct Source {
    std::string service;
    std::string host;
    std::string container;
    ServiceRole role;
    std::size_t dropped = 0;
  };

  void read(Source& source, std::stop_token stop);
  bool push(Source& source, LogEvent event);
  HealthColor color_for(const Source& source);

  const HostRegistry& hosts_;
  const EnginePool& pool_;
  std::string stack_;
  std::size_t capacity_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<TaggedLogEvent> queue_;
  std::size_t open_sources_ = 0;
  bool closed_ = false;

  std::mutex color_mutex_;
  std::map<std::string, HealthColor> colors_;
  std::chrono::steady_clock::time_point colors_at_{};

  std::vector<std::unique_ptr<Source>> sources_;
  std::vector<std::jthread> readers_;
};

}  // namespace labcube
