#include "labcube/monitor.hpp"

#include <algorithm>
#include <tuple>

#include "labcube/error.hpp"

namespace labcube {

std::string to_string(HealthColor color) {
  switch (color) {
    case HealthColor::Gray: return "GRAY";
    case HealthColor::Green: return "GREEN";
    case HealthColor::Yellow: return "YELLOW";
    case HealthColor::Red: return "RED";
  }
  return "GRAY";
}

HealthColor classify_service(const ContainerStatus& status, ServiceRole role) {
  switch (status.state) {
    case ContainerState::Running: return HealthColor::Green;
    case ContainerState::Creating:
    case ContainerState::Starting: return HealthColor::Yellow;
    case ContainerState::Exited:
      return role == ServiceRole::Util && status.exit_code == 0 ? HealthColor::Green : HealthColor::Red;
    case ContainerState::Missing: return HealthColor::Red;
  }
  return HealthColor::Red;
}

HealthColor aggregate_health(const std::vector<HealthColor>& colors) {
  // Enumerator order is the dominance order.
  HealthColor worst = HealthColor::Gray;
  for (HealthColor c : colors) worst = std::max(worst, c);
  return worst;
}

namespace {

bool has_session(const std::optional<StackSession>& session) {
  return session && session->state != SessionState::Stopped;
}

ContainerStatus lookup(const std::vector<ContainerStatus>& statuses, const std::string& container,
                       const std::string& service, const std::string& stack, const std::string& host) {
  for (const auto& st : statuses) {
    if (st.container == container) return st;
  }
  return missing_status(service, stack, host);
}

}  // namespace

HealthSnapshot poll_snapshot(const std::optional<StackSession>& session, const HostRegistry& hosts,
                             const EnginePool& pool) {
  HealthSnapshot snap;
  snap.taken_at = pool.now();
  if (!session) return snap;
  snap.stack = session->stack;
  snap.session_id = session->id;
  snap.session_state = session->state;
  if (!has_session(session)) return snap;

  std::map<std::string, std::optional<std::vector<ContainerStatus>>> by_host;
  std::vector<HealthColor> colors;
  for (const auto& svc : session->manifest.services) {
    const std::string host = session->service_host(svc, hosts);
    auto it = by_host.find(host);
    if (it == by_host.end()) {
      std::optional<std::vector<ContainerStatus>> statuses;
      try {
        statuses = query_container_states(pool, host, session->stack);
      } catch (const EngineError&) {
        statuses.reset();
      }
      it = by_host.emplace(host, std::move(statuses)).first;
    }
    ServiceHealth health;
    health.service = svc.name;
    health.status = it->second ? lookup(*it->second, container_name(session->stack, svc.name), svc.name,
                                        session->stack, host)
                               : missing_status(svc.name, session->stack, host);
    health.color = classify_service(health.status, svc.role);
    colors.push_back(health.color);
    snap.per_service.push_back(std::move(health));
  }
  snap.aggregate = aggregate_health(colors);
  return snap;
}

std::vector<const ServiceSpec*> select_services(const std::optional<StackSession>& session,
                                                const std::vector<std::string>& filter) {
  if (!has_session(session)) throw NoActiveSession("no stack is running");
  std::vector<const ServiceSpec*> out;
  for (const auto& name : filter) {
    if (!session->manifest.find_service(name)) throw UnknownService(name);
  }
  for (const auto& svc : session->manifest.services) {
    if (filter.empty() || std::find(filter.begin(), filter.end(), svc.name) != filter.end()) {
      out.push_back(&svc);
    }
  }
  return out;
}

std::vector<TaggedLogEvent> multiplex_logs(const std::optional<StackSession>& session,
                                           const HostRegistry& hosts, const EnginePool& pool,
                                           const std::vector<std::string>& filter) {
  const auto services = select_services(session, filter);
  const HealthSnapshot snap = poll_snapshot(session, hosts, pool);
  auto color_of = [&](const std::string& service) {
    for (const auto& h : snap.per_service) {
      if (h.service == service) return h.color;
    }
    return HealthColor::Gray;
  };

  // (ts, service position, sequence within service) gives a stable k-way merge.
  std::vector<std::tuple<Timestamp, std::size_t, std::size_t, TaggedLogEvent>> all;
  for (std::size_t i = 0; i < services.size(); ++i) {
    const ServiceSpec& svc = *services[i];
    const std::string host = session->service_host(svc, hosts);
    std::vector<LogEvent> events;
    try {
      events = stream_container_logs(pool, host, container_name(session->stack, svc.name));
    } catch (const EngineError&) {
      continue;  // not deployed or host unreachable: nothing to show
    }
    const HealthColor color = color_of(svc.name);
    for (std::size_t j = 0; j < events.size(); ++j) {
      all.emplace_back(events[j].ts, i, j, TaggedLogEvent{std::move(events[j]), color});
    }
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a)) <
           std::tie(std::get<0>(b), std::get<1>(b), std::get<2>(b));
  });
  std::vector<TaggedLogEvent> out;
  out.reserve(all.size());
  for (auto& entry : all) out.push_back(std::move(std::get<3>(entry)));
  return out;
}

LogSubscription::LogSubscription(const std::optional<StackSession>& session, const HostRegistry& hosts,
                                 const EnginePool& pool, const std::vector<std::string>& filter,
                                 std::size_t capacity)
    : hosts_(hosts), pool_(pool), capacity_(std::max<std::size_t>(capacity, 1)) {
  const auto services = select_services(session, filter);
  stack_ = session->stack;
  for (const ServiceSpec* svc : services) {
    auto source = std::make_unique<Source>();
    source->service = svc->name;
    source->host = session->service_host(*svc, hosts);
    source->container = container_name(session->stack, svc->name);
    source->role = svc->role;
    sources_.push_back(std::move(source));
  }
  open_sources_ = sources_.size();
  for (auto& source : sources_) {
    readers_.emplace_back([this, s = source.get()](std::stop_token stop) { read(*s, stop); });
  }
}

LogSubscription::~LogSubscription() { close(); }

void LogSubscription::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
  for (auto& r : readers_) r.request_stop();
  for (auto& r : readers_) {
    if (r.joinable()) r.join();
  }
}

HealthColor LogSubscription::color_for(const Source& source) {
  const auto now = std::chrono::steady_clock::now();
  {
    std::lock_guard lock(color_mutex_);
    auto it = colors_.find(source.service);
    if (it != colors_.end() && now - colors_at_ < std::chrono::milliseconds(100)) return it->second;
  }
  HealthColor color;
  try {
    const auto statuses = query_container_states(pool_, source.host, stack_);
    color = classify_service(lookup(statuses, source.container, source.service, stack_, source.host), source.role);
  } catch (const EngineError&) {
    color = HealthColor::Red;
  }
  std::lock_guard lock(color_mutex_);
  colors_[source.service] = color;
  colors_at_ = now;
  return color;
}

bool LogSubscription::push(Source& source, LogEvent event) {
  const bool terminal = event.kind == LogEventKind::End;
  const HealthColor color = color_for(source);
  {
    std::lock_guard lock(mutex_);
    if (closed_) return false;
    // END always gets through so consumers learn a service finished.
    if (queue_.size() >= capacity_ && !terminal) {
      ++source.dropped;
      return true;
    }
    if (source.dropped > 0) {
      LogEvent gap;
      gap.ts = event.ts;
      gap.service = source.service;
      gap.container = source.container;
      gap.kind = LogEventKind::Gap;
      gap.dropped = source.dropped;
      source.dropped = 0;
      queue_.push_back({std::move(gap), color});
    }
    queue_.push_back({std::move(event), color});
  }
  cv_.notify_all();
  return true;
}

void LogSubscription::read(Source& source, std::stop_token stop) {
  bool ended = false;
  try {
    stream_container_logs(
        pool_, source.host, source.container, true,
        [&](const LogEvent& e) {
          if (e.kind == LogEventKind::End) ended = true;
          return push(source, e) && !stop.stop_requested();
        },
        stop);
  } catch (const Error&) {
    // Missing container or unreachable host: the service simply ends.
  }
  if (!ended && !stop.stop_requested()) {
    LogEvent end;
    end.ts = pool_.now();
    end.service = source.service;
    end.container = source.container;
    end.kind = LogEventKind::End;
    push(source, std::move(end));
  }
  {
    std::lock_guard lock(mutex_);
    --open_sources_;
  }
  cv_.notify_all();
}

std::optional<TaggedLogEvent> LogSubscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  auto ready = [&] { return !queue_.empty() || open_sources_ == 0 || closed_; };
  if (timeout == std::chrono::milliseconds::max()) {
    cv_.wait(lock, ready);
  } else if (!cv_.wait_for(lock, timeout, ready)) {
    return std::nullopt;
  }
  if (queue_.empty()) return std::nullopt;
  TaggedLogEvent e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

bool LogSubscription::finished() const {
  std::lock_guard lock(mutex_);
  return (open_sources_ == 0 && queue_.empty()) || closed_;
}

}  // namespace labcube
