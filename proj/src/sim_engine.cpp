#include "labcube/sim_engine.hpp"

#include <algorithm>

#include "labcube/compose.hpp"
#include "labcube/error.hpp"

namespace labcube {

namespace {

using nlohmann::json;

NetworkSpec builtin_bridge() {
  NetworkSpec spec;
  spec.name = std::string(kDefaultBridge);
  spec.kind = NetworkKind::BridgeWan;
  spec.subnet = *Ipv4Cidr::parse("172.17.0.0/16");
  spec.gateway = Ipv4Address::parse("172.17.0.1");
  return spec;
}

EngineError not_found(const std::string& ref, const std::string& what) {
  return EngineError(EngineError::Kind::NotFound, ref, what);
}

EngineError conflict(const std::string& ref, const std::string& what) {
  return EngineError(EngineError::Kind::Conflict, ref, what);
}

bool unsafe_path(const std::string& path) {
  if (path.empty() || path.front() == '/') return true;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto end = std::min(path.find('/', start), path.size());
    if (path.compare(start, end - start, "..") == 0 && end - start == 2) return true;
    start = end + 1;
  }
  return false;
}

json status_json(ContainerState state) { return to_string(state); }

ContainerState state_from_string(const std::string& s) {
  for (auto st : {ContainerState::Creating, ContainerState::Starting, ContainerState::Running,
                  ContainerState::Exited, ContainerState::Missing}) {
    if (to_string(st) == s) return st;
  }
  throw SchemaError("state", "unknown container state '" + s + "'");
}

json network_spec_json(const NetworkSpec& spec) {
  json j{{"name", spec.name}, {"kind", to_string(spec.kind)}, {"subnet", spec.subnet.to_string()}};
  if (spec.gateway) j["gateway"] = spec.gateway->to_string();
  if (spec.vlan_id) j["vlan_id"] = *spec.vlan_id;
  return j;
}

NetworkSpec network_spec_from_json(const json& j) {
  NetworkSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.kind = parse_network_kind(j.at("kind").get<std::string>()).value();
  spec.subnet = Ipv4Cidr::parse(j.at("subnet").get<std::string>()).value();
  if (j.contains("gateway")) spec.gateway = Ipv4Address::parse(j["gateway"].get<std::string>());
  if (j.contains("vlan_id")) spec.vlan_id = j["vlan_id"].get<int>();
  return spec;
}

json log_event_json(const LogEvent& e) {
  return {{"ts", to_millis(e.ts)}, {"service", e.service}, {"container", e.container},
          {"line", e.line}, {"channel", to_string(e.channel)}};
}

LogEvent log_event_from_json(const json& j) {
  LogEvent e;
  e.ts = from_millis(j.at("ts").get<std::int64_t>());
  e.service = j.at("service").get<std::string>();
  e.container = j.at("container").get<std::string>();
  e.line = j.at("line").get<std::string>();
  e.channel = j.at("channel").get<std::string>() == "err" ? LogChannel::Err : LogChannel::Out;
  return e;
}

}  // namespace

std::shared_ptr<SimulatedLab> SimulatedLab::create(const std::vector<std::string>& hosts) {
  std::shared_ptr<SimulatedLab> lab(new SimulatedLab());
  std::lock_guard lock(lab->mutex_);
  for (const auto& h : hosts) lab->host_locked(h);
  return lab;
}

SimulatedLab::Host& SimulatedLab::host_locked(const std::string& name) {
  auto it = hosts_.find(name);
  if (it == hosts_.end()) {
    it = hosts_.emplace(name, Host{}).first;
    const NetworkSpec bridge = builtin_bridge();
    it->second.networks.emplace(bridge.name, Network{bridge, ""});
  }
  return it->second;
}

const SimulatedLab::Host* SimulatedLab::find_host_locked(std::string_view name) const {
  auto it = hosts_.find(name);
  return it == hosts_.end() ? nullptr : &it->second;
}

void SimulatedLab::check_reachable_locked(const std::string& host) const {
  const Host* h = find_host_locked(host);
  if (!h || !h->reachable) {
    throw EngineError(EngineError::Kind::Unreachable, host, "simulated host is unreachable");
  }
}

Timestamp SimulatedLab::advance_locked(std::int64_t millis) {
  clock_ += millis;
  return from_millis(clock_);
}

void SimulatedLab::append_log_locked(Container& c, std::string line, LogChannel channel) {
  LogEvent e;
  e.ts = from_millis(clock_);
  e.service = c.descriptor.service;
  e.container = c.descriptor.name;
  e.line = std::move(line);
  e.channel = channel;
  c.logs.push_back(std::move(e));
}

void SimulatedLab::record_locked(const std::string& host, json entry) {
  entry["seq"] = ++seq_;
  entry["ts"] = clock_;
  entry["host"] = host;
  log_.push_back(std::move(entry));
}

const SimulatedLab::FailureRule* SimulatedLab::take_failure_locked(const std::string& host,
                                                                   std::string_view action,
                                                                   const std::string& subject,
                                                                   bool after_effect) {
  for (auto& rule : failures_) {
    if (rule.remaining <= 0 || rule.after_effect != after_effect) continue;
    if (rule.host != host || rule.action != action) continue;
    if (!rule.subject.empty() && rule.subject != subject) continue;
    --rule.remaining;
    return &rule;
  }
  return nullptr;
}

std::shared_ptr<Engine> SimulatedLab::engine(const std::string& host) {
  {
    std::lock_guard lock(mutex_);
    host_locked(host);
  }
  return std::make_shared<SimulatedEngine>(shared_from_this(), host);
}

std::shared_ptr<RemoteChannel> SimulatedLab::channel(const std::string& host) {
  {
    std::lock_guard lock(mutex_);
    host_locked(host);
  }
  return std::make_shared<SimulatedEngine>(shared_from_this(), host);
}

EnginePool SimulatedLab::make_pool(const std::string& controller) {
  std::vector<std::string> names;
  {
    std::lock_guard lock(mutex_);
    host_locked(controller);
    for (const auto& [name, h] : hosts_) names.push_back(name);
  }
  EnginePool pool;
  for (const auto& name : names) {
    auto engine = std::make_shared<SimulatedEngine>(shared_from_this(), name);
    pool.add_engine(name, engine);
    if (name != controller) pool.add_channel(name, engine);
  }
  pool.set_ticker([lab = shared_from_this()] { lab->tick(); });
  pool.set_clock([lab = shared_from_this()] { return lab->now(); });
  return pool;
}

void SimulatedLab::tick() {
  {
    std::lock_guard lock(mutex_);
    const Timestamp now = advance_locked(kTickMillis);
    for (auto& [name, h] : hosts_) {
      for (auto& [cname, c] : h.containers) {
        if (c.state != ContainerState::Starting) continue;
        c.state = ContainerState::Running;
        c.since = now;
        append_log_locked(c, "service ready", LogChannel::Out);
      }
    }
  }
  changed_.notify_all();
}

Timestamp SimulatedLab::now() const {
  std::lock_guard lock(mutex_);
  return from_millis(clock_);
}

json SimulatedLab::action_log() const {
  std::lock_guard lock(mutex_);
  return json(log_);
}

json SimulatedLab::action_log(std::string_view host) const {
  std::lock_guard lock(mutex_);
  json out = json::array();
  for (const auto& e : log_) {
    if (e.at("host").get<std::string>() == host) out.push_back(e);
  }
  return out;
}

std::size_t SimulatedLab::action_count() const {
  std::lock_guard lock(mutex_);
  return log_.size();
}

void SimulatedLab::script_logs(const std::string& host, const std::string& container,
                               const std::vector<std::string>& lines, LogChannel channel) {
  {
    std::lock_guard lock(mutex_);
    Host& h = host_locked(host);
    auto it = h.containers.find(container);
    for (const auto& line : lines) {
      if (it != h.containers.end()) {
        advance_locked(1);
        append_log_locked(it->second, line, channel);
      } else {
        LogEvent e;
        e.container = container;
        e.line = line;
        e.channel = channel;
        h.pending_logs[container].push_back(std::move(e));
      }
    }
  }
  changed_.notify_all();
}

void SimulatedLab::set_exit(const std::string& host, const std::string& container, int code) {
  {
    std::lock_guard lock(mutex_);
    Host& h = host_locked(host);
    auto it = h.containers.find(container);
    if (it == h.containers.end()) throw not_found(container, "no such container");
    Container& c = it->second;
    c.state = ContainerState::Exited;
    c.exit_code = code;
    c.since = advance_locked(1);
    append_log_locked(c, "process exited with code " + std::to_string(code),
                      code == 0 ? LogChannel::Out : LogChannel::Err);
  }
  changed_.notify_all();
}

void SimulatedLab::set_reachable(const std::string& host, bool reachable) {
  {
    std::lock_guard lock(mutex_);
    host_locked(host).reachable = reachable;
  }
  changed_.notify_all();
}

void SimulatedLab::inject_failure(FailureRule rule) {
  std::lock_guard lock(mutex_);
  failures_.push_back(std::move(rule));
}

std::optional<std::string> SimulatedLab::volume(const std::string& host,
                                                const std::string& container) const {
  std::lock_guard lock(mutex_);
  const Host* h = find_host_locked(host);
  if (!h) return std::nullopt;
  auto it = h->volumes.find(container);
  if (it == h->volumes.end()) return std::nullopt;
  return it->second;
}

void SimulatedLab::set_volume(const std::string& host, const std::string& container,
                              std::string content) {
  std::lock_guard lock(mutex_);
  host_locked(host).volumes[container] = std::move(content);
}

std::vector<std::vector<TransferFile>> SimulatedLab::transfers(const std::string& host) const {
  std::lock_guard lock(mutex_);
  const Host* h = find_host_locked(host);
  return h ? h->transfers : std::vector<std::vector<TransferFile>>{};
}

std::vector<std::string> SimulatedLab::network_names(const std::string& host) const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  if (const Host* h = find_host_locked(host)) {
    for (const auto& [name, n] : h->networks) out.push_back(name);
  }
  return out;
}

std::vector<SimulatedLab::AttachmentRecord> SimulatedLab::attachments(
    const std::string& host, const std::string& container) const {
  std::lock_guard lock(mutex_);
  const Host* h = find_host_locked(host);
  if (!h) return {};
  auto it = h->containers.find(container);
  if (it == h->containers.end()) return {};
  return it->second.attachments;
}

EngineResult SimulatedLab::apply(const std::string& host, const EngineAction& action) {
  EngineResult result;
  {
    std::lock_guard lock(mutex_);
    check_reachable_locked(host);
    Host& h = host_locked(host);
    const std::string subject = action_subject(action);
    const std::string_view name = action_name(action);
    advance_locked(1);
    json entry = action_to_json(action);
    if (take_failure_locked(host, name, subject, false)) {
      entry["error"] = "ENGINE_FAILED";
      record_locked(host, std::move(entry));
      throw EngineError(EngineError::Kind::Failed, subject, "injected failure");
    }
    try {
      result = apply_locked(h, host, action);
    } catch (const Error& e) {
      entry["error"] = e.code();
      record_locked(host, std::move(entry));
      changed_.notify_all();
      throw;
    }
    const bool fail_after = take_failure_locked(host, name, subject, true) != nullptr;
    if (fail_after) entry["error"] = "ENGINE_FAILED";
    record_locked(host, std::move(entry));
    changed_.notify_all();
    if (fail_after) throw EngineError(EngineError::Kind::Failed, subject, "injected failure");
  }
  return result;
}

EngineResult SimulatedLab::apply_locked(Host& h, const std::string& host, const EngineAction& action) {
  const Timestamp now = from_millis(clock_);
  auto container = [&](const std::string& name) -> Container& {
    auto it = h.containers.find(name);
    if (it == h.containers.end()) throw not_found(name, "no such container");
    return it->second;
  };

  if (const auto* a = std::get_if<action::CreateNetwork>(&action)) {
    if (h.networks.count(a->spec.name)) throw conflict(a->spec.name, "network already exists");
    h.networks.emplace(a->spec.name, Network{a->spec, a->stack});
    return {};
  }
  if (const auto* a = std::get_if<action::RemoveNetwork>(&action)) {
    auto it = h.networks.find(a->network);
    if (it == h.networks.end()) throw not_found(a->network, "no such network");
    if (it->second.stack.empty()) throw conflict(a->network, "built-in network cannot be removed");
    for (const auto& [name, c] : h.containers) {
      for (const auto& att : c.attachments) {
        if (att.network == a->network) throw conflict(a->network, "network has attached container " + name);
      }
    }
    h.networks.erase(it);
    return {};
  }
  if (const auto* a = std::get_if<action::CreateContainer>(&action)) {
    const std::string& name = a->container.name;
    if (h.containers.count(name)) throw conflict(name, "container name already in use");
    Container c;
    c.descriptor = a->container;
    c.since = now;
    if (auto pending = h.pending_logs.find(name); pending != h.pending_logs.end()) {
      for (auto& e : pending->second) {
        e.ts = now;
        e.service = c.descriptor.service;
        c.logs.push_back(std::move(e));
      }
      h.pending_logs.erase(pending);
    }
    h.containers.emplace(name, std::move(c));
    return {};
  }
  if (const auto* a = std::get_if<action::ConnectNetwork>(&action)) {
    Container& c = container(a->container);
    auto net = h.networks.find(a->network);
    if (net == h.networks.end()) throw not_found(a->network, "no such network");
    for (const auto& att : c.attachments) {
      if (att.network == a->network) throw conflict(a->container, "already connected to " + a->network);
    }
    if (a->ip) {
      if (!net->second.spec.subnet.contains(*a->ip)) {
        throw conflict(a->ip->to_string(), "address outside " + net->second.spec.subnet.to_string());
      }
      for (const auto& [name, other] : h.containers) {
        for (const auto& att : other.attachments) {
          if (att.network == a->network && att.ip == a->ip) {
            throw conflict(a->ip->to_string(), "address in use on " + a->network + " by " + name);
          }
        }
      }
    }
    c.attachments.push_back({a->network, a->ip, a->mac});
    return {};
  }
  if (const auto* a = std::get_if<action::DisconnectNetwork>(&action)) {
    Container& c = container(a->container);
    auto it = std::find_if(c.attachments.begin(), c.attachments.end(),
                           [&](const AttachmentRecord& r) { return r.network == a->network; });
    if (it == c.attachments.end()) throw not_found(a->network, "container is not connected");
    c.attachments.erase(it);
    return {};
  }
  if (const auto* a = std::get_if<action::StartContainer>(&action)) {
    Container& c = container(a->container);
    if (c.state == ContainerState::Starting || c.state == ContainerState::Running) return {};
    c.state = ContainerState::Starting;
    c.exit_code.reset();
    c.since = now;
    append_log_locked(c, "container started", LogChannel::Out);
    return {};
  }
  if (const auto* a = std::get_if<action::StopContainer>(&action)) {
    Container& c = container(a->container);
    if (c.state != ContainerState::Starting && c.state != ContainerState::Running) return {};
    c.state = ContainerState::Exited;
    c.exit_code = 0;
    c.since = now;
    append_log_locked(c, "container stopped (exit 0)", LogChannel::Out);
    return {};
  }
  if (const auto* a = std::get_if<action::RemoveContainer>(&action)) {
    Container& c = container(a->container);
    if (c.state == ContainerState::Starting || c.state == ContainerState::Running) {
      throw conflict(a->container, "container is running");
    }
    h.containers.erase(a->container);
    return {};
  }
  if (const auto* a = std::get_if<action::Exec>(&action)) {
    Container& c = container(a->container);
    if (c.state != ContainerState::Starting && c.state != ContainerState::Running) {
      throw conflict(a->container, "container is not running");
    }
    const std::string& cmd = a->command;
    std::string& db = h.volumes[a->container];
    if (cmd.rfind("subscriber-db replace\n", 0) == 0) {
      db = cmd.substr(std::string_view("subscriber-db replace\n").size());
      return {};
    }
    if (cmd.rfind("subscriber-db add ", 0) == 0) {
      db += cmd.substr(std::string_view("subscriber-db add ").size());
      db += '\n';
      return {};
    }
    if (cmd == "subscriber-db dump") return {db};
    throw EngineError(EngineError::Kind::Failed, a->container, "unsupported command");
  }
  if (const auto* a = std::get_if<action::TransferFiles>(&action)) {
    for (const auto& f : a->files) {
      if (unsafe_path(f.path)) {
        throw EngineError(EngineError::Kind::TransferFailed, f.path, "unsafe destination path");
      }
    }
    for (const auto& f : a->files) h.received[f.path] = f.content;
    h.transfers.push_back(a->files);
    return {};
  }
  if (const auto* a = std::get_if<action::RemoteComposeUp>(&action)) {
    compose_up_locked(h, host, a->fragment);
    return {};
  }
  return {};
}

void SimulatedLab::compose_up_locked(Host& h, const std::string& host, const ComposeFragment& fragment) {
  ComposeDocument doc;
  try {
    doc = parse_compose(fragment.document);
  } catch (const Error& e) {
    throw EngineError(EngineError::Kind::Failed, fragment.id, e.what());
  }
  for (const auto& net : doc.networks) {
    if (!h.networks.count(net.name)) apply_locked(h, host, action::CreateNetwork{net, doc.stack});
  }
  for (const auto& svc : doc.services) {
    for (const auto& m : svc.container.mounts) {
      if (!h.received.count(m.source)) throw not_found(m.source, "mount source was never transferred");
    }
    apply_locked(h, host, action::CreateContainer{svc.container});
    for (const auto& n : svc.networks) {
      apply_locked(h, host, action::ConnectNetwork{svc.container.name, n.network, n.ip, n.mac});
    }
    apply_locked(h, host, action::StartContainer{svc.container.name});
  }
}

EngineResult SimulatedLab::transfer(const std::string& host, const std::vector<TransferFile>& files) {
  return apply(host, action::TransferFiles{host, files});
}

EngineResult SimulatedLab::compose_up(const std::string& host, const ComposeFragment& fragment) {
  return apply(host, action::RemoteComposeUp{host, fragment});
}

std::vector<ContainerStatus> SimulatedLab::query_containers(const std::string& host,
                                                            std::string_view stack) const {
  std::lock_guard lock(mutex_);
  check_reachable_locked(host);
  std::vector<ContainerStatus> out;
  for (const auto& [name, c] : find_host_locked(host)->containers) {
    if (!stack.empty() && c.descriptor.stack != stack) continue;
    ContainerStatus st;
    st.service = c.descriptor.service;
    st.container = name;
    st.stack = c.descriptor.stack;
    st.host = host;
    st.state = c.state;
    if (c.state == ContainerState::Exited) st.exit_code = c.exit_code.value_or(0);
    st.since = c.since;
    out.push_back(std::move(st));
  }
  return out;
}

std::vector<std::string> SimulatedLab::query_networks(const std::string& host,
                                                      std::string_view stack) const {
  std::lock_guard lock(mutex_);
  check_reachable_locked(host);
  std::vector<std::string> out;
  for (const auto& [name, n] : find_host_locked(host)->networks) {
    if (stack.empty() || n.stack == stack) out.push_back(name);
  }
  return out;
}

void SimulatedLab::stream_logs(const std::string& host, std::string_view container, bool follow,
                               const LogSink& sink, std::stop_token stop) const {
  std::unique_lock lock(mutex_);
  check_reachable_locked(host);
  const std::string name(container);
  const Host* h = find_host_locked(host);
  auto lookup = [&]() -> const Container* {
    auto it = h->containers.find(name);
    return it == h->containers.end() ? nullptr : &it->second;
  };
  const Container* c = lookup();
  if (!c) throw not_found(name, "no such container");
  const std::string service = c->descriptor.service;

  std::size_t next = 0;
  while (true) {
    c = lookup();
    std::vector<LogEvent> batch;
    if (c) {
      batch.assign(c->logs.begin() + static_cast<std::ptrdiff_t>(std::min(next, c->logs.size())),
                   c->logs.end());
      next = c->logs.size();
    }
    const bool finished = !c || c->state == ContainerState::Exited || !h->reachable;
    const Timestamp now = from_millis(clock_);
    lock.unlock();
    for (const auto& e : batch) {
      if (!sink(e)) return;
    }
    if (!follow) return;
    if (finished) {
      LogEvent end;
      end.ts = now;
      end.service = service;
      end.container = name;
      end.kind = LogEventKind::End;
      sink(end);
      return;
    }
    lock.lock();
    const bool woke = changed_.wait(lock, stop, [&] {
      const Container* cur = lookup();
      return !cur || cur->logs.size() > next || cur->state == ContainerState::Exited || !h->reachable;
    });
    if (!woke) return;
  }
}

json SimulatedLab::to_json() const {
  std::lock_guard lock(mutex_);
  json hosts = json::object();
  for (const auto& [name, h] : hosts_) {
    json networks = json::array();
    for (const auto& [nname, n] : h.networks) {
      if (n.stack.empty() && nname == kDefaultBridge) continue;
      json j = network_spec_json(n.spec);
      j["stack"] = n.stack;
      networks.push_back(j);
    }
    json containers = json::array();
    for (const auto& [cname, c] : h.containers) {
      json desc = action_to_json(action::CreateContainer{c.descriptor});
      json atts = json::array();
      for (const auto& a : c.attachments) {
        json aj{{"network", a.network}};
        if (a.ip) aj["ip"] = a.ip->to_string();
        if (a.mac) aj["mac"] = *a.mac;
        atts.push_back(aj);
      }
      json logs = json::array();
      for (const auto& e : c.logs) logs.push_back(log_event_json(e));
      json cj{{"descriptor", desc}, {"state", status_json(c.state)}, {"since", to_millis(c.since)},
              {"attachments", atts}, {"logs", logs}};
      if (c.exit_code) cj["exit_code"] = *c.exit_code;
      containers.push_back(cj);
    }
    json transfers = json::array();
    for (const auto& set : h.transfers) {
      json files = json::array();
      for (const auto& f : set) files.push_back({{"path", f.path}, {"content", f.content}});
      transfers.push_back(files);
    }
    hosts[name] = {{"reachable", h.reachable}, {"networks", networks},
                   {"containers", containers},  {"volumes", h.volumes},
                   {"received", h.received},    {"transfers", transfers}};
  }
  return {{"clock", clock_}, {"seq", seq_}, {"hosts", hosts}, {"log", log_}};
}

std::shared_ptr<SimulatedLab> SimulatedLab::from_json(const json& state) {
  std::shared_ptr<SimulatedLab> lab(new SimulatedLab());
  std::lock_guard lock(lab->mutex_);
  try {
    lab->clock_ = state.at("clock").get<std::int64_t>();
    lab->seq_ = state.at("seq").get<std::uint64_t>();
    for (const auto& e : state.at("log")) lab->log_.push_back(e);
    for (const auto& [name, hj] : state.at("hosts").items()) {
      Host& h = lab->host_locked(name);
      h.reachable = hj.at("reachable").get<bool>();
      for (const auto& nj : hj.at("networks")) {
        NetworkSpec spec = network_spec_from_json(nj);
        h.networks[spec.name] = Network{spec, nj.at("stack").get<std::string>()};
      }
      for (const auto& cj : hj.at("containers")) {
        const json& d = cj.at("descriptor");
        Container c;
        c.descriptor.name = d.at("container").get<std::string>();
        c.descriptor.stack = d.at("stack").get<std::string>();
        c.descriptor.service = d.at("service").get<std::string>();
        c.descriptor.image = d.at("image").get<std::string>();
        c.descriptor.role = parse_service_role(d.at("role").get<std::string>()).value();
        if (d.contains("command")) c.descriptor.command = d["command"].get<std::string>();
        for (const auto& m : d.at("mounts")) {
          c.descriptor.mounts.push_back({m.at("source").get<std::string>(), m.at("target").get<std::string>()});
        }
        c.state = state_from_string(cj.at("state").get<std::string>());
        c.since = from_millis(cj.at("since").get<std::int64_t>());
        if (cj.contains("exit_code")) c.exit_code = cj["exit_code"].get<int>();
        for (const auto& a : cj.at("attachments")) {
          AttachmentRecord r{a.at("network").get<std::string>(), std::nullopt, std::nullopt};
          if (a.contains("ip")) r.ip = Ipv4Address::parse(a["ip"].get<std::string>());
          if (a.contains("mac")) r.mac = a["mac"].get<std::string>();
          c.attachments.push_back(std::move(r));
        }
        for (const auto& e : cj.at("logs")) c.logs.push_back(log_event_from_json(e));
        h.containers.emplace(c.descriptor.name, std::move(c));
      }
      h.volumes = hj.at("volumes").get<std::map<std::string, std::string>>();
      h.received = hj.at("received").get<std::map<std::string, std::string>>();
      for (const auto& set : hj.at("transfers")) {
        std::vector<TransferFile> files;
        for (const auto& f : set) files.push_back({f.at("path").get<std::string>(), f.at("content").get<std::string>()});
        h.transfers.push_back(std::move(files));
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError("state", e.what());
  } catch (const std::bad_optional_access&) {
    throw SchemaError("state", "invalid value in saved state");
  }
  return lab;
}

SimulatedEngine::SimulatedEngine(std::shared_ptr<SimulatedLab> lab, std::string host)
    : lab_(std::move(lab)), host_(std::move(host)), endpoint_{host_, "sim://" + host_, EndpointKind::Simulated} {}

EngineResult SimulatedEngine::apply(const EngineAction& action) { return lab_->apply(host_, action); }

std::vector<ContainerStatus> SimulatedEngine::query_containers(std::string_view stack) const {
  return lab_->query_containers(host_, stack);
}

std::vector<std::string> SimulatedEngine::query_networks(std::string_view stack) const {
  return lab_->query_networks(host_, stack);
}

void SimulatedEngine::stream_logs(std::string_view container, bool follow, const LogSink& sink,
                                  std::stop_token stop) const {
  lab_->stream_logs(host_, container, follow, sink, std::move(stop));
}

EngineResult SimulatedEngine::transfer(const std::vector<TransferFile>& files) {
  return lab_->transfer(host_, files);
}

EngineResult SimulatedEngine::compose_up(const ComposeFragment& fragment) {
  return lab_->compose_up(host_, fragment);
}

}  // namespace labcube
