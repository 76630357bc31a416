#include "labcube/engine.hpp"

#include <algorithm>

#include "labcube/error.hpp"
#include "labcube/hash.hpp"

namespace labcube {

std::string container_name(std::string_view stack, std::string_view service) {
  return std::string(stack) + "_" + std::string(service);
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string_view action_name(const EngineAction& action) {
  return std::visit(
      overloaded{
          [](const action::CreateNetwork&) { return std::string_view("CreateNetwork"); },
          [](const action::RemoveNetwork&) { return std::string_view("RemoveNetwork"); },
          [](const action::CreateContainer&) { return std::string_view("CreateContainer"); },
          [](const action::ConnectNetwork&) { return std::string_view("ConnectNetwork"); },
          [](const action::DisconnectNetwork&) { return std::string_view("DisconnectNetwork"); },
          [](const action::StartContainer&) { return std::string_view("StartContainer"); },
          [](const action::StopContainer&) { return std::string_view("StopContainer"); },
          [](const action::RemoveContainer&) { return std::string_view("RemoveContainer"); },
          [](const action::Exec&) { return std::string_view("Exec"); },
          [](const action::TransferFiles&) { return std::string_view("TransferFiles"); },
          [](const action::RemoteComposeUp&) { return std::string_view("RemoteComposeUp"); },
      },
      action);
}

std::string action_subject(const EngineAction& action) {
  return std::visit(
      overloaded{
          [](const action::CreateNetwork& a) { return a.spec.name; },
          [](const action::RemoveNetwork& a) { return a.network; },
          [](const action::CreateContainer& a) { return a.container.name; },
          [](const action::ConnectNetwork& a) { return a.container; },
          [](const action::DisconnectNetwork& a) { return a.container; },
          [](const action::StartContainer& a) { return a.container; },
          [](const action::StopContainer& a) { return a.container; },
          [](const action::RemoveContainer& a) { return a.container; },
          [](const action::Exec& a) { return a.container; },
          [](const action::TransferFiles& a) { return a.host; },
          [](const action::RemoteComposeUp& a) { return a.fragment.id; },
      },
      action);
}

void check_action(const EngineAction& action) {
  auto require = [&](const std::string& value, const char* field) {
    if (value.empty()) {
      throw SchemaError(std::string(action_name(action)) + "." + field, "must be non-empty");
    }
  };
  std::visit(overloaded{
                 [&](const action::CreateNetwork& a) { require(a.spec.name, "network"); },
                 [&](const action::RemoveNetwork& a) { require(a.network, "network"); },
                 [&](const action::CreateContainer& a) { require(a.container.name, "container"); },
                 [&](const action::ConnectNetwork& a) {
                   require(a.container, "container");
                   require(a.network, "network");
                 },
                 [&](const action::DisconnectNetwork& a) {
                   require(a.container, "container");
                   require(a.network, "network");
                 },
                 [&](const action::StartContainer& a) { require(a.container, "container"); },
                 [&](const action::StopContainer& a) { require(a.container, "container"); },
                 [&](const action::RemoveContainer& a) { require(a.container, "container"); },
                 [&](const action::Exec& a) { require(a.container, "container"); },
                 [&](const action::TransferFiles& a) { require(a.host, "host"); },
                 [&](const action::RemoteComposeUp& a) {
                   require(a.host, "host");
                   require(a.fragment.id, "fragment");
                 },
             },
             action);
}

std::string file_set_hash(const std::vector<TransferFile>& files) {
  std::vector<const TransferFile*> sorted;
  for (const auto& f : files) sorted.push_back(&f);
  std::sort(sorted.begin(), sorted.end(),
            [](const TransferFile* a, const TransferFile* b) { return a->path < b->path; });
  std::string manifest;
  for (const auto* f : sorted) manifest += f->path + '\0' + sha256_hex(f->content) + '\n';
  return sha256_hex(manifest);
}

nlohmann::json action_to_json(const EngineAction& action) {
  using nlohmann::json;
  json j{{"action", std::string(action_name(action))}};
  std::visit(overloaded{
                 [&](const action::CreateNetwork& a) {
                   j["network"] = a.spec.name;
                   j["kind"] = to_string(a.spec.kind);
                   j["subnet"] = a.spec.subnet.to_string();
                   if (a.spec.gateway) j["gateway"] = a.spec.gateway->to_string();
                   if (a.spec.vlan_id) j["vlan_id"] = *a.spec.vlan_id;
                   j["stack"] = a.stack;
                 },
                 [&](const action::RemoveNetwork& a) { j["network"] = a.network; },
                 [&](const action::CreateContainer& a) {
                   j["container"] = a.container.name;
                   j["service"] = a.container.service;
                   j["stack"] = a.container.stack;
                   j["image"] = a.container.image;
                   j["role"] = to_string(a.container.role);
                   if (a.container.command) j["command"] = *a.container.command;
                   json mounts = json::array();
                   for (const auto& m : a.container.mounts) {
                     mounts.push_back({{"source", m.source}, {"target", m.target}});
                   }
                   j["mounts"] = mounts;
                 },
                 [&](const action::ConnectNetwork& a) {
                   j["container"] = a.container;
                   j["network"] = a.network;
                   if (a.ip) j["ip"] = a.ip->to_string();
                   if (a.mac) j["mac"] = *a.mac;
                 },
                 [&](const action::DisconnectNetwork& a) {
                   j["container"] = a.container;
                   j["network"] = a.network;
                 },
                 [&](const action::StartContainer& a) { j["container"] = a.container; },
                 [&](const action::StopContainer& a) { j["container"] = a.container; },
                 [&](const action::RemoveContainer& a) { j["container"] = a.container; },
                 [&](const action::Exec& a) {
                   j["container"] = a.container;
                   j["command_sha256"] = sha256_hex(a.command);
                   const auto eol = a.command.find('\n');
                   j["command"] = a.command.substr(0, eol);
                 },
                 [&](const action::TransferFiles& a) {
                   j["host"] = a.host;
                   j["hash"] = file_set_hash(a.files);
                   json files = json::array();
                   for (const auto& f : a.files) {
                     files.push_back({{"path", f.path},
                                      {"sha256", sha256_hex(f.content)},
                                      {"bytes", f.content.size()}});
                   }
                   j["files"] = files;
                 },
                 [&](const action::RemoteComposeUp& a) {
                   j["host"] = a.host;
                   j["fragment"] = a.fragment.id;
                   j["sha256"] = sha256_hex(a.fragment.document);
                 },
             },
             action);
  return j;
}

std::string to_string(ContainerState state) {
  switch (state) {
    case ContainerState::Creating: return "CREATING";
    case ContainerState::Starting: return "STARTING";
    case ContainerState::Running: return "RUNNING";
    case ContainerState::Exited: return "EXITED";
    case ContainerState::Missing: return "MISSING";
  }
  return "MISSING";
}

ContainerStatus missing_status(std::string service, std::string stack, std::string host) {
  ContainerStatus status;
  status.container = container_name(stack, service);
  status.service = std::move(service);
  status.stack = std::move(stack);
  status.host = std::move(host);
  status.state = ContainerState::Missing;
  return status;
}

std::string to_string(LogChannel channel) { return channel == LogChannel::Out ? "out" : "err"; }

std::string to_string(LogEventKind kind) {
  switch (kind) {
    case LogEventKind::Line: return "line";
    case LogEventKind::End: return "end";
    case LogEventKind::Gap: return "gap";
  }
  return "line";
}

void EnginePool::add_engine(const std::string& host, std::shared_ptr<Engine> engine) {
  engines_[host] = std::move(engine);
}

void EnginePool::add_channel(const std::string& host, std::shared_ptr<RemoteChannel> channel) {
  channels_[host] = std::move(channel);
}

Engine& EnginePool::engine(std::string_view host) const {
  auto it = engines_.find(host);
  if (it == engines_.end()) {
    throw EngineError(EngineError::Kind::Unreachable, std::string(host), "no engine for host");
  }
  return *it->second;
}

RemoteChannel& EnginePool::channel(std::string_view host) const {
  auto it = channels_.find(host);
  if (it == channels_.end()) {
    throw EngineError(EngineError::Kind::Unreachable, std::string(host), "no remote channel for host");
  }
  return *it->second;
}

bool EnginePool::has_engine(std::string_view host) const { return engines_.count(host) > 0; }

std::vector<std::string> EnginePool::hosts() const {
  std::vector<std::string> out;
  for (const auto& [h, e] : engines_) out.push_back(h);
  return out;
}

void EnginePool::tick() const {
  if (ticker_) ticker_();
}

Timestamp EnginePool::now() const {
  if (clock_) return clock_();
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

EngineResult apply_engine_action(const EnginePool& pool, std::string_view host,
                                 const EngineAction& action) {
  check_action(action);
  if (const auto* t = std::get_if<action::TransferFiles>(&action)) {
    return pool.channel(t->host).transfer(t->files);
  }
  if (const auto* up = std::get_if<action::RemoteComposeUp>(&action)) {
    return pool.channel(up->host).compose_up(up->fragment);
  }
  return pool.engine(host).apply(action);
}

std::vector<ContainerStatus> query_container_states(const EnginePool& pool, std::string_view host,
                                                    std::string_view stack) {
  return pool.engine(host).query_containers(stack);
}

std::vector<LogEvent> stream_container_logs(const EnginePool& pool, std::string_view host,
                                            std::string_view container) {
  std::vector<LogEvent> events;
  pool.engine(host).stream_logs(
      container, false,
      [&](const LogEvent& e) {
        events.push_back(e);
        return true;
      },
      {});
  return events;
}

void stream_container_logs(const EnginePool& pool, std::string_view host,
                           std::string_view container, bool follow, const LogSink& sink,
                           std::stop_token stop) {
  pool.engine(host).stream_logs(container, follow, sink, std::move(stop));
}

EngineResult remote_transfer_and_up(const EnginePool& pool, std::string_view host,
                                    const std::vector<TransferFile>& files,
                                    const ComposeFragment& fragment) {
  RemoteChannel& channel = pool.channel(host);
  if (!files.empty()) channel.transfer(files);
  return channel.compose_up(fragment);
}

}  // namespace labcube
