#include "labcube/docker_engine.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <ctime>
#include <thread>

#include "httplib.h"
#include "labcube/error.hpp"

extern char** environ;

namespace labcube::docker {

namespace {

using nlohmann::json;

std::string api(std::string_view path) { return "/" + std::string(kApiVersion) + std::string(path); }

std::string url_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

std::string label_filter(std::string_view stack) {
  json filters = json::object();
  filters["label"] = stack.empty() ? json::array({"labcube.stack"})
                                   : json::array({"labcube.stack=" + std::string(stack)});
  return url_encode(filters.dump());
}

Request post(std::string path, std::optional<json> body = std::nullopt, std::vector<int> tolerated = {}) {
  return {"POST", api(path), std::move(body), std::move(tolerated)};
}

// "2024-06-01T12:00:00.123456789Z rest" -> (ts, rest); falls back to epoch.
std::pair<Timestamp, std::string> split_timestamp(const std::string& line) {
  const auto space = line.find(' ');
  if (space == std::string::npos) return {Timestamp{}, line};
  std::tm tm{};
  int frac_digits = 0;
  long frac = 0;
  char fracbuf[16] = {0};
  if (std::sscanf(line.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%15[0-9]", &tm.tm_year, &tm.tm_mon,
                  &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec, fracbuf) < 6) {
    return {Timestamp{}, line};
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  frac_digits = static_cast<int>(std::string_view(fracbuf).size());
  for (int i = 0; i < 3; ++i) frac = frac * 10 + (i < frac_digits ? fracbuf[i] - '0' : 0);
  const auto secs = static_cast<std::int64_t>(timegm(&tm));
  return {from_millis(secs * 1000 + frac), line.substr(space + 1)};
}

}  // namespace

std::vector<Request> translate(const EngineAction& action, std::string_view deploy_root) {
  check_action(action);
  if (const auto* a = std::get_if<action::CreateNetwork>(&action)) {
    json pool{{"Subnet", a->spec.subnet.to_string()}};
    if (a->spec.gateway) pool["Gateway"] = a->spec.gateway->to_string();
    json labels{{"labcube.stack", a->stack}, {"labcube.kind", to_string(a->spec.kind)}};
    if (a->spec.vlan_id) labels["labcube.vlan_id"] = std::to_string(*a->spec.vlan_id);
    json body{{"Name", a->spec.name},
              {"Driver", a->spec.kind == NetworkKind::MacvlanTrunk ? "macvlan" : "bridge"},
              {"Internal", a->spec.kind == NetworkKind::Isolated},
              {"IPAM", {{"Config", json::array({pool})}}},
              {"Labels", labels}};
    return {post("/networks/create", body)};
  }
  if (const auto* a = std::get_if<action::RemoveNetwork>(&action)) {
    return {{"DELETE", api("/networks/" + a->network), std::nullopt, {}}};
  }
  if (const auto* a = std::get_if<action::CreateContainer>(&action)) {
    const ContainerDescriptor& c = a->container;
    json binds = json::array();
    for (const auto& m : c.mounts) {
      std::string source = m.source;
      if (!deploy_root.empty() && !source.empty() && source.front() != '/') {
        source = std::string(deploy_root) + "/" + source;
      }
      binds.push_back(source + ":" + m.target + ":ro");
    }
    json body{{"Image", c.image},
              {"Labels",
               {{"labcube.stack", c.stack}, {"labcube.service", c.service}, {"labcube.role", to_string(c.role)}}},
              {"HostConfig", {{"Binds", binds}}}};
    if (c.command) body["Cmd"] = json::array({"sh", "-c", *c.command});
    // New containers land on the default bridge; detach so attachments are explicit.
    return {post("/containers/create?name=" + url_encode(c.name), body),
            post("/networks/" + std::string(kDefaultBridge) + "/disconnect",
                 json{{"Container", c.name}, {"Force", true}})};
  }
  if (const auto* a = std::get_if<action::ConnectNetwork>(&action)) {
    json endpoint = json::object();
    if (a->ip) endpoint["IPAMConfig"] = {{"IPv4Address", a->ip->to_string()}};
    if (a->mac) endpoint["MacAddress"] = *a->mac;
    return {post("/networks/" + a->network + "/connect",
                 json{{"Container", a->container}, {"EndpointConfig", endpoint}})};
  }
  if (const auto* a = std::get_if<action::DisconnectNetwork>(&action)) {
    return {post("/networks/" + a->network + "/disconnect", json{{"Container", a->container}, {"Force", false}})};
  }
  if (const auto* a = std::get_if<action::StartContainer>(&action)) {
    return {post("/containers/" + a->container + "/start", std::nullopt, {304})};
  }
  if (const auto* a = std::get_if<action::StopContainer>(&action)) {
    return {post("/containers/" + a->container + "/stop", std::nullopt, {304})};
  }
  if (const auto* a = std::get_if<action::RemoveContainer>(&action)) {
    return {{"DELETE", api("/containers/" + a->container), std::nullopt, {}}};
  }
  if (const auto* a = std::get_if<action::Exec>(&action)) {
    return {post("/containers/" + a->container + "/exec",
                 json{{"AttachStdout", true}, {"AttachStderr", true}, {"Cmd", json::array({"sh", "-c", a->command})}})};
  }
  throw SchemaError(std::string(action_name(action)), "not an engine request; use the remote channel");
}

ContainerState map_state(std::string_view state, std::string_view health) {
  if (state == "created") return ContainerState::Creating;
  if (state == "restarting") return ContainerState::Starting;
  if (state == "running") return health == "starting" ? ContainerState::Starting : ContainerState::Running;
  if (state == "exited" || state == "dead") return ContainerState::Exited;
  return ContainerState::Missing;
}

std::vector<ContainerStatus> parse_container_list(const json& list, const std::string& host) {
  std::vector<ContainerStatus> out;
  for (const auto& entry : list) {
    ContainerStatus st;
    st.host = host;
    const json labels = entry.value("Labels", json::object());
    st.stack = labels.value("labcube.stack", "");
    st.service = labels.value("labcube.service", "");
    const json names = entry.value("Names", json::array());
    if (!names.empty()) {
      st.container = names[0].get<std::string>();
      if (!st.container.empty() && st.container.front() == '/') st.container.erase(0, 1);
    }
    const std::string status = entry.value("Status", "");
    std::string health;
    if (status.find("(health: starting)") != std::string::npos) health = "starting";
    st.state = map_state(entry.value("State", ""), health);
    if (st.state == ContainerState::Exited) {
      int code = 0;
      const auto open = status.find('(');
      if (open != std::string::npos) std::sscanf(status.c_str() + open, "(%d)", &code);
      st.exit_code = code;
    }
    if (st.state != ContainerState::Missing) {
      st.since = from_millis(entry.value("Created", std::int64_t{0}) * 1000);
    }
    out.push_back(std::move(st));
  }
  return out;
}

std::vector<std::pair<LogChannel, std::string>> demux_logs(std::string& buffer) {
  std::vector<std::pair<LogChannel, std::string>> lines;
  std::size_t pos = 0;
  while (buffer.size() - pos >= 8) {
    const auto* h = reinterpret_cast<const unsigned char*>(buffer.data() + pos);
    const std::size_t len = (std::size_t{h[4]} << 24) | (std::size_t{h[5]} << 16) |
                            (std::size_t{h[6]} << 8) | std::size_t{h[7]};
    if (buffer.size() - pos - 8 < len) break;
    const LogChannel channel = h[0] == 2 ? LogChannel::Err : LogChannel::Out;
    std::string_view payload(buffer.data() + pos + 8, len);
    while (!payload.empty()) {
      const auto nl = payload.find('\n');
      lines.emplace_back(channel, std::string(payload.substr(0, nl)));
      if (nl == std::string_view::npos) break;
      payload.remove_prefix(nl + 1);
    }
    pos += 8 + len;
  }
  buffer.erase(0, pos);
  return lines;
}

EngineError error_for_status(int status, const std::string& ref, const std::string& message) {
  if (status == 404) return EngineError(EngineError::Kind::NotFound, ref, message);
  if (status == 409) return EngineError(EngineError::Kind::Conflict, ref, message);
  if (status <= 0) return EngineError(EngineError::Kind::Unreachable, ref, message);
  return EngineError(EngineError::Kind::Failed, ref, message);
}

SshTarget parse_ssh_address(std::string_view address) {
  constexpr std::string_view scheme = "ssh://";
  if (address.substr(0, scheme.size()) != scheme) throw SchemaError("channel", "expected ssh://");
  std::string rest(address.substr(scheme.size()));
  SshTarget target;
  const auto colon = rest.rfind(':');
  if (colon != std::string::npos) {
    try {
      target.port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw SchemaError("channel", "bad ssh port in '" + std::string(address) + "'");
    }
    rest.resize(colon);
  }
  if (rest.empty()) throw SchemaError("channel", "missing ssh host");
  target.destination = rest;
  return target;
}

namespace {

std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out.push_back(c);
  }
  return out + "'";
}

std::vector<std::string> ssh_prefix(const SshTarget& target) {
  std::vector<std::string> argv{"ssh", "-o", "BatchMode=yes"};
  if (target.port) {
    argv.push_back("-p");
    argv.push_back(std::to_string(*target.port));
  }
  argv.push_back(target.destination);
  return argv;
}

}  // namespace

std::vector<std::string> ssh_write_file_argv(const SshTarget& target, std::string_view remote_dir,
                                             std::string_view path) {
  const std::string full = std::string(remote_dir) + "/" + std::string(path);
  const auto slash = full.rfind('/');
  auto argv = ssh_prefix(target);
  argv.push_back("mkdir -p " + shell_quote(full.substr(0, slash)) + " && cat > " + shell_quote(full));
  return argv;
}

std::vector<std::string> ssh_compose_up_argv(const SshTarget& target, std::string_view remote_dir,
                                             std::string_view project) {
  auto argv = ssh_prefix(target);
  argv.push_back("cd " + shell_quote(remote_dir) + " && docker compose -p " + shell_quote(project) +
                 " -f - up -d");
  return argv;
}

std::pair<int, std::string> run_process(const std::vector<std::string>& argv, std::string_view input) {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw EngineError(EngineError::Kind::Failed, argv.at(0), "pipe failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw EngineError(EngineError::Kind::Failed, argv.at(0), "pipe failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], 0);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], 1);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], 2);
  posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pipe[0]);
  close(out_pipe[1]);
  if (rc != 0) {
    close(in_pipe[1]);
    close(out_pipe[0]);
    throw EngineError(EngineError::Kind::Unreachable, argv.at(0), "cannot run " + argv.at(0));
  }
  std::thread writer([fd = in_pipe[1], input] {
    std::size_t done = 0;
    while (done < input.size()) {
      const ssize_t n = write(fd, input.data() + done, input.size() - done);
      if (n <= 0) break;
      done += static_cast<std::size_t>(n);
    }
    close(fd);
  });
  std::string output;
  char buf[4096];
  ssize_t n;
  while ((n = read(out_pipe[0], buf, sizeof buf)) > 0) output.append(buf, static_cast<std::size_t>(n));
  close(out_pipe[0]);
  writer.join();
  int status = 0;
  waitpid(pid, &status, 0);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : 128, output};
}

namespace {

std::unique_ptr<httplib::Client> make_client(const EngineEndpoint& endpoint) {
  const std::string& addr = endpoint.address;
  std::unique_ptr<httplib::Client> client;
  if (addr.rfind("unix://", 0) == 0) {
    client = std::make_unique<httplib::Client>(addr.substr(7));
    client->set_address_family(AF_UNIX);
  } else if (addr.rfind("tcp://", 0) == 0) {
    client = std::make_unique<httplib::Client>("http://" + addr.substr(6));
  } else {
    throw SchemaError("engine", "'" + addr + "' is not a unix:// or tcp:// address");
  }
  client->set_connection_timeout(5);
  return client;
}

}  // namespace

DockerEngine::DockerEngine(EngineEndpoint endpoint, std::string deploy_root)
    : endpoint_(std::move(endpoint)), deploy_root_(std::move(deploy_root)) {
  make_client(endpoint_);
}

DockerEngine::Response DockerEngine::send(const Request& request) const {
  auto client = make_client(endpoint_);
  httplib::Result res;
  const std::string body = request.body ? request.body->dump() : std::string();
  if (request.method == "GET") res = client->Get(request.path);
  else if (request.method == "DELETE") res = client->Delete(request.path);
  else res = client->Post(request.path, body, "application/json");
  if (!res) {
    throw EngineError(EngineError::Kind::Unreachable, endpoint_.address, httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

EngineResult DockerEngine::apply(const EngineAction& action) {
  const std::string subject = action_subject(action);
  EngineResult result;
  for (const auto& request : translate(action, deploy_root_)) {
    const Response res = send(request);
    const bool ok = (res.status >= 200 && res.status < 300) ||
                    std::find(request.tolerated.begin(), request.tolerated.end(), res.status) !=
                        request.tolerated.end();
    if (!ok) throw error_for_status(res.status, subject, res.body);
    result.output = res.body;
  }
  if (std::holds_alternative<action::Exec>(action)) {
    const std::string id = json::parse(result.output).at("Id").get<std::string>();
    const Response res = send(post("/exec/" + id + "/start", json{{"Detach", false}, {"Tty", false}}));
    if (res.status < 200 || res.status >= 300) throw error_for_status(res.status, subject, res.body);
    std::string buffer = res.body;
    result.output.clear();
    for (const auto& [channel, line] : demux_logs(buffer)) result.output += line + "\n";
  }
  return result;
}

std::vector<ContainerStatus> DockerEngine::query_containers(std::string_view stack) const {
  const Response res = send({"GET", api("/containers/json?all=true&filters=" + label_filter(stack)), {}, {}});
  if (res.status != 200) throw error_for_status(res.status, endpoint_.host, res.body);
  return parse_container_list(json::parse(res.body), endpoint_.host);
}

std::vector<std::string> DockerEngine::query_networks(std::string_view stack) const {
  const Response res = send({"GET", api("/networks?filters=" + label_filter(stack)), {}, {}});
  if (res.status != 200) throw error_for_status(res.status, endpoint_.host, res.body);
  std::vector<std::string> names;
  for (const auto& n : json::parse(res.body)) names.push_back(n.value("Name", ""));
  return names;
}

void DockerEngine::stream_logs(std::string_view container, bool follow, const LogSink& sink,
                               std::stop_token stop) const {
  const std::string name(container);
  const Response inspect = send({"GET", api("/containers/" + name + "/json"), {}, {}});
  if (inspect.status != 200) throw error_for_status(inspect.status, name, inspect.body);
  const std::string service =
      json::parse(inspect.body).at("Config").value("Labels", json::object()).value("labcube.service", name);

  auto client = make_client(endpoint_);
  client->set_read_timeout(follow ? 3600 : 30);
  std::string buffer;
  bool cancelled = false;
  const std::string path = api("/containers/" + name + "/logs?stdout=1&stderr=1&timestamps=1&follow=" +
                               (follow ? "1" : "0"));
  client->Get(path, [&](const char* data, std::size_t len) {
    buffer.append(data, len);
    for (const auto& [channel, raw] : demux_logs(buffer)) {
      auto [ts, line] = split_timestamp(raw);
      LogEvent e{ts, service, name, line, channel, LogEventKind::Line, 0};
      if (!sink(e) || stop.stop_requested()) {
        cancelled = true;
        return false;
      }
    }
    return true;
  });
  if (follow && !cancelled && !stop.stop_requested()) {
    LogEvent end;
    end.service = service;
    end.container = name;
    end.kind = LogEventKind::End;
    sink(end);
  }
}

SshChannel::SshChannel(EngineEndpoint endpoint)
    : endpoint_(std::move(endpoint)), target_(parse_ssh_address(endpoint_.address)) {}

EngineResult SshChannel::transfer(const std::vector<TransferFile>& files) {
  for (const auto& f : files) {
    auto [code, output] = run_process(ssh_write_file_argv(target_, kRemoteDir, f.path), f.content);
    if (code != 0) throw EngineError(EngineError::Kind::TransferFailed, f.path, output);
  }
  return {};
}

EngineResult SshChannel::compose_up(const ComposeFragment& fragment) {
  auto [code, output] = run_process(ssh_compose_up_argv(target_, kRemoteDir, fragment.id), fragment.document);
  if (code == 255) throw EngineError(EngineError::Kind::Unreachable, endpoint_.host, output);
  if (code != 0) throw EngineError(EngineError::Kind::Failed, fragment.id, output);
  return {output};
}

}  // namespace labcube::docker
