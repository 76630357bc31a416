#include "labcube/orchestrator.hpp"

#include <algorithm>

#include "labcube/compose.hpp"
#include "labcube/error.hpp"

namespace labcube {

std::string seed_command(const SeedSet& seeds) {
  return "subscriber-db replace\n" + canonical_seed_document(seeds);
}

namespace {

ContainerDescriptor descriptor_for(const StackManifest& manifest, const ServiceSpec& service,
                                   const std::vector<RenderedConfig>& rendered) {
  ContainerDescriptor d;
  d.name = container_name(manifest.name, service.name);
  d.stack = manifest.name;
  d.service = service.name;
  d.image = service.image;
  d.role = service.role;
  d.command = service.command;
  for (const auto& c : configs_for_service(rendered, service.name)) {
    d.mounts.push_back({output_path(c).generic_string(), c.target_path});
  }
  return d;
}

}  // namespace

ComposeFragment make_compose_fragment(const StackManifest& manifest, const ServiceSpec& service,
                                      const NetworkCatalog& networks, const AddressPlan& addresses,
                                      const std::vector<RenderedConfig>& rendered) {
  ComposeDocument doc;
  doc.stack = manifest.name;
  ComposeService svc;
  svc.container = descriptor_for(manifest, service, rendered);
  for (const auto& a : service.attachments) {
    ComposeNetworkRef ref{a.network, std::nullopt, std::nullopt};
    if (const AddressAssignment* assigned = addresses.find(service.name, a.network)) {
      ref.ip = assigned->address;
      ref.mac = assigned->mac;
    }
    svc.networks.push_back(std::move(ref));
    const NetworkSpec* spec = networks.find(a.network);
    if (!spec) throw PlanningError("network '" + a.network + "' of " + service.name + " is not in the catalog");
    doc.networks.push_back(*spec);
  }
  doc.services.push_back(std::move(svc));
  return {container_name(manifest.name, service.name), emit_compose(doc)};
}

std::vector<HostAction> delegate_ran_service(const StackManifest& manifest, const ServiceSpec& service,
                                             const HostRegistry& hosts, const NetworkCatalog& networks,
                                             const AddressPlan& addresses,
                                             const std::vector<RenderedConfig>& rendered) {
  const std::string container = container_name(manifest.name, service.name);
  if (hosts.is_controller(service.target_host)) {
    return {{hosts.controller, action::StartContainer{container}}};
  }
  if (!hosts.find_ran_host(service.target_host)) throw UnknownHost(service.target_host);

  std::vector<HostAction> out;
  for (const auto& a : service.attachments) {
    out.push_back({hosts.controller, action::DisconnectNetwork{container, a.network}});
  }
  out.push_back({hosts.controller,
                 action::ConnectNetwork{container, std::string(kDefaultBridge), std::nullopt, std::nullopt}});
  std::vector<TransferFile> files;
  for (const auto& c : configs_for_service(rendered, service.name)) {
    files.push_back({output_path(c).generic_string(), c.content});
  }
  const std::string& target = service.target_host;
  out.push_back({target, action::TransferFiles{target, std::move(files)}});
  out.push_back({target, action::RemoteComposeUp{
                             target, make_compose_fragment(manifest, service, networks, addresses, rendered)}});
  return out;
}

DeploymentPlan plan_deployment(const StackManifest& manifest, const ResolvedSettings& settings,
                               const NetworkCatalog& networks, const HostRegistry& hosts,
                               const SeedSet& seeds, const std::vector<RenderedConfig>& rendered) {
  DeploymentPlan plan;
  plan.stack = manifest.name;
  plan.seed = seeds;
  const std::string& controller = hosts.controller;

  for (const auto& name : manifest.networks) {
    const NetworkSpec* spec = networks.find(name);
    if (!spec) throw PlanningError("network '" + name + "' is not in the catalog");
    plan.actions.push_back({controller, action::CreateNetwork{*spec, manifest.name}});
  }

  const AddressPlan addresses = build_address_plan(manifest, settings);
  const ServiceSpec* db = nullptr;
  for (const auto& s : manifest.services) {
    if (s.role == ServiceRole::Db) {
      db = &s;
      break;
    }
  }
  if (!db && !seeds.records.empty()) {
    throw PlanningError("stack '" + manifest.name + "' has subscribers to seed but no DB service");
  }

  for (const auto& name : topological_order(manifest)) {
    const ServiceSpec& svc = *manifest.find_service(name);
    if (svc.role != ServiceRole::Ran && !hosts.is_controller(svc.target_host)) {
      throw PlanningError("only RAN services can be delegated; " + svc.name + " targets " + svc.target_host);
    }
    const ContainerDescriptor d = descriptor_for(manifest, svc, rendered);
    plan.actions.push_back({controller, action::CreateContainer{d}});
    for (const auto& a : svc.attachments) {
      action::ConnectNetwork connect{d.name, a.network, std::nullopt, std::nullopt};
      if (const AddressAssignment* assigned = addresses.find(svc.name, a.network)) {
        connect.ip = assigned->address;
        connect.mac = assigned->mac;
      }
      plan.actions.push_back({controller, std::move(connect)});
    }
    if (svc.role == ServiceRole::Ran) {
      for (auto& step : delegate_ran_service(manifest, svc, hosts, networks, addresses, rendered)) {
        plan.actions.push_back(std::move(step));
      }
    } else {
      plan.actions.push_back({controller, action::StartContainer{d.name}});
    }
    if (db == &svc) plan.actions.push_back({controller, action::Exec{d.name, seed_command(seeds)}});
  }
  return plan;
}

std::string to_string(SessionState state) {
  switch (state) {
    case SessionState::Starting: return "STARTING";
    case SessionState::Running: return "RUNNING";
    case SessionState::Stopping: return "STOPPING";
    case SessionState::Stopped: return "STOPPED";
    case SessionState::Failed: return "FAILED";
  }
  return "FAILED";
}

std::string to_string(StartPolicy policy) {
  return policy == StartPolicy::ReplaceActive ? "REPLACE_ACTIVE" : "REJECT_IF_ACTIVE";
}

std::optional<StartPolicy> parse_start_policy(std::string_view text) {
  if (text == "REJECT_IF_ACTIVE") return StartPolicy::RejectIfActive;
  if (text == "REPLACE_ACTIVE") return StartPolicy::ReplaceActive;
  return std::nullopt;
}

std::string StackSession::service_host(const ServiceSpec& service, const HostRegistry& hosts) const {
  if (service.role == ServiceRole::Ran && !hosts.is_controller(service.target_host)) return service.target_host;
  return hosts.controller;
}

Orchestrator::Orchestrator(StackCatalog catalog, SettingsMap global, LabEnvironment env, EnginePool pool,
                           Options options)
    : catalog_(std::move(catalog)),
      env_(std::move(env)),
      pool_(std::move(pool)),
      options_(options),
      global_(std::move(global)),
      worker_([this](std::stop_token stop) { run_worker(stop); }) {}

Orchestrator::~Orchestrator() {
  worker_.request_stop();
  queue_cv_.notify_all();
}

void Orchestrator::enqueue(Task task) {
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(std::move(task));
  }
  queue_cv_.notify_all();
}

void Orchestrator::run_worker(std::stop_token stop) {
  while (true) {
    Task task;
    {
      std::unique_lock lock(queue_mutex_);
      if (!queue_cv_.wait(lock, stop, [&] { return !queue_.empty(); })) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

PreparedStack Orchestrator::prepare(const std::string& stack, bool emulated) const {
  const CatalogEntry* entry = catalog_.find(stack);
  if (!entry) throw UnknownStack(stack);
  PreparedStack p;
  p.manifest = entry->manifest;
  ValidationReport report;
  if (emulated) {
    try {
      p.manifest = make_emulated_variant(p.manifest);
    } catch (const Error& e) {
      report.add("EMULATION_UNSUPPORTED", stack, e.what());
      throw ValidationFailed(report);
    }
  }
  const SettingsMap global = settings();
  report.append(validate_settings(global));
  p.settings = resolve_settings(global, p.manifest.overrides);
  report.append(validate_manifest(p.manifest, env_.networks, env_.hosts, p.settings));
  if (report.has_errors()) throw ValidationFailed(report);

  try {
    p.rendered = render_stack(p.manifest, p.settings, env_.template_root);
  } catch (const Error& e) {
    report.add("RENDER_ERROR", p.manifest.name, e.what());
  }
  try {
    SettingsMap effective;
    for (const auto& [k, v] : p.settings.effective) effective.set(k, v);
    p.seeds = build_seed_set(env_.subscribers, plmn_from_settings(effective));
  } catch (const ValidationFailed& e) {
    report.append(e.report());
  } catch (const Error& e) {
    report.add(e.code(), "subscribers", e.what());
  }
  if (report.has_errors()) throw ValidationFailed(report);

  try {
    p.plan = plan_deployment(p.manifest, p.settings, env_.networks, env_.hosts, p.seeds, p.rendered);
  } catch (const Error& e) {
    report.add(e.code(), p.manifest.name, e.what());
    throw ValidationFailed(report);
  }
  return p;
}

ValidationReport Orchestrator::validate(const std::string& stack, bool emulated) const {
  try {
    prepare(stack, emulated);
  } catch (const ValidationFailed& e) {
    return e.report();
  }
  return {};
}

std::optional<std::string> Orchestrator::latest_id_locked() const {
  if (order_.empty()) return std::nullopt;
  return order_.back();
}

void Orchestrator::update_session(const std::string& id, const std::function<void(StackSession&)>& change) {
  std::vector<StackSession> snapshot;
  std::function<void(const std::vector<StackSession>&)> observer;
  {
    std::lock_guard lock(mutex_);
    change(sessions_.at(id));
    observer = session_observer_;
    if (observer) {
      for (const auto& sid : order_) snapshot.push_back(sessions_.at(sid));
    }
  }
  if (observer) observer(snapshot);
}

void Orchestrator::apply(const HostAction& action) {
  std::function<void(const HostAction&)> observer;
  {
    std::lock_guard lock(mutex_);
    observer = action_observer_;
  }
  if (observer) observer(action);
  apply_engine_action(pool_, action.host, action.action);
}

Orchestrator::Ticket Orchestrator::submit_start(const std::string& stack, StartPolicy policy, bool emulated) {
  auto admitted = std::make_shared<std::promise<StackSession>>();
  auto done = std::make_shared<std::promise<StackSession>>();
  std::future<StackSession> admitted_future = admitted->get_future();
  std::shared_future<StackSession> done_future = done->get_future().share();

  enqueue([this, stack, policy, emulated, admitted, done] {
    std::string id;
    PreparedStack prepared;
    StackSession session;
    try {
      prepared = prepare(stack, emulated);
      std::optional<std::string> predecessor;
      {
        std::lock_guard lock(mutex_);
        if (auto latest = latest_id_locked(); latest && sessions_.at(*latest).state != SessionState::Stopped) {
          if (policy == StartPolicy::RejectIfActive) throw StackAlreadyActive(sessions_.at(*latest).stack);
          predecessor = latest;
        }
      }
      if (predecessor) do_stop(*predecessor);

      session.stack = prepared.manifest.name;
      session.state = SessionState::Starting;
      session.started_at = pool_.now();
      session.manifest = prepared.manifest;
      session.plan = prepared.plan;
      session.planned = prepared.plan.actions.size();
      {
        std::lock_guard lock(mutex_);
        id = "s" + std::to_string(next_id_++);
        session.id = id;
        sessions_[id] = session;
        order_.push_back(id);
      }
      update_session(id, [](StackSession&) {});
    } catch (...) {
      admitted->set_exception(std::current_exception());
      done->set_exception(std::current_exception());
      return;
    }
    admitted->set_value(session);
    try {
      done->set_value(do_start(prepared, id));
    } catch (...) {
      done->set_exception(std::current_exception());
    }
  });
  StackSession s = admitted_future.get();
  return {std::move(s), done_future};
}

StackSession Orchestrator::do_start(const PreparedStack& prepared, const std::string& id) {
  const auto& actions = prepared.plan.actions;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    try {
      apply(actions[i]);
    } catch (const Error& e) {
      const std::string failure = std::string(action_name(actions[i].action)) + " on " + actions[i].host +
                                  " failed: " + e.code() + ": " + e.what();
      update_session(id, [&](StackSession& s) {
        s.state = SessionState::Failed;
        s.failure = failure;
      });
      std::lock_guard lock(mutex_);
      return sessions_.at(id);
    }
    update_session(id, [&](StackSession& s) { s.applied = i + 1; });
  }

  const StackManifest& m = prepared.manifest;
  const int ticks = options_.readiness_ticks.value_or(static_cast<int>(m.services.size()) + 2);
  StackSession probe;
  std::vector<std::string> pending;
  for (int t = 0; t < ticks; ++t) {
    pool_.tick();
    pending.clear();
    std::map<std::string, std::vector<ContainerStatus>> by_host;
    for (const auto& svc : m.services) {
      const std::string host = probe.service_host(svc, env_.hosts);
      if (!by_host.count(host)) {
        try {
          by_host[host] = query_container_states(pool_, host, m.name);
        } catch (const Error&) {
          by_host[host] = {};
        }
      }
      const std::string cname = container_name(m.name, svc.name);
      const auto& statuses = by_host[host];
      auto it = std::find_if(statuses.begin(), statuses.end(),
                             [&](const ContainerStatus& st) { return st.container == cname; });
      const bool ready = it != statuses.end() &&
                         (it->state == ContainerState::Running ||
                          (svc.role == ServiceRole::Util && it->state == ContainerState::Exited &&
                           it->exit_code == 0));
      if (!ready) pending.push_back(svc.name);
    }
    if (pending.empty()) break;
  }
  update_session(id, [&](StackSession& s) {
    if (pending.empty()) {
      s.state = SessionState::Running;
      return;
    }
    std::string names;
    for (const auto& p : pending) names += (names.empty() ? "" : ", ") + p;
    s.state = SessionState::Failed;
    s.failure = "not running after " + std::to_string(ticks) + " poll ticks: " + names;
  });
  std::lock_guard lock(mutex_);
  return sessions_.at(id);
}

Orchestrator::Ticket Orchestrator::submit_stop() {
  auto admitted = std::make_shared<std::promise<StackSession>>();
  auto done = std::make_shared<std::promise<StackSession>>();
  std::future<StackSession> admitted_future = admitted->get_future();
  std::shared_future<StackSession> done_future = done->get_future().share();

  enqueue([this, admitted, done] {
    std::string id;
    {
      std::lock_guard lock(mutex_);
      auto latest = latest_id_locked();
      if (!latest) {
        auto error = std::make_exception_ptr(NoActiveSession("no stack has been started"));
        admitted->set_exception(error);
        done->set_exception(error);
        return;
      }
      id = *latest;
      admitted->set_value(sessions_.at(id));
    }
    try {
      done->set_value(do_stop(id));
    } catch (...) {
      done->set_exception(std::current_exception());
    }
  });
  StackSession s = admitted_future.get();
  return {std::move(s), done_future};
}

StackSession Orchestrator::do_stop(const std::string& id) {
  StackSession session;
  {
    std::lock_guard lock(mutex_);
    session = sessions_.at(id);
  }
  if (session.state == SessionState::Stopped) return session;
  update_session(id, [](StackSession& s) { s.state = SessionState::Stopping; });

  const StackManifest& m = session.manifest;
  std::vector<std::string> order;
  try {
    order = topological_order(m);
  } catch (const Error&) {
    for (const auto& s : m.services) order.push_back(s.name);
  }
  std::map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

  std::vector<std::string> errors;
  auto attempt = [&](const HostAction& action) {
    try {
      apply(action);
    } catch (const Error& e) {
      errors.push_back(std::string(action_name(action.action)) + " " + action_subject(action.action) + " on " +
                       action.host + ": " + e.code() + ": " + e.what());
    }
  };

  // Remote hosts before the controller so delegated services go first.
  std::vector<std::string> hosts = pool_.hosts();
  std::stable_partition(hosts.begin(), hosts.end(),
                        [&](const std::string& h) { return !env_.hosts.is_controller(h); });

  std::vector<ContainerStatus> found;
  for (const auto& host : hosts) {
    try {
      for (auto& st : query_container_states(pool_, host, m.name)) found.push_back(std::move(st));
    } catch (const Error& e) {
      errors.push_back("query on " + host + ": " + e.code() + ": " + e.what());
    }
  }
  // Reverse dependency order; containers of unknown services go first.
  std::stable_sort(found.begin(), found.end(), [&](const ContainerStatus& a, const ContainerStatus& b) {
    const auto ra = rank.count(a.service) ? rank[a.service] : order.size();
    const auto rb = rank.count(b.service) ? rank[b.service] : order.size();
    return ra > rb;
  });
  for (const auto& st : found) {
    if (st.state == ContainerState::Starting || st.state == ContainerState::Running) {
      attempt({st.host, action::StopContainer{st.container}});
    }
  }
  for (const auto& st : found) attempt({st.host, action::RemoveContainer{st.container}});
  for (const auto& host : hosts) {
    std::vector<std::string> networks;
    try {
      networks = pool_.engine(host).query_networks(m.name);
    } catch (const Error& e) {
      errors.push_back("network query on " + host + ": " + e.code() + ": " + e.what());
    }
    for (const auto& n : networks) attempt({host, action::RemoveNetwork{n}});
  }

  if (!errors.empty()) {
    std::string joined;
    for (const auto& e : errors) joined += (joined.empty() ? "" : "; ") + e;
    update_session(id, [&](StackSession& s) {
      s.state = SessionState::Failed;
      s.failure = "teardown incomplete: " + joined;
    });
    throw EngineError(EngineError::Kind::Failed, m.name, "teardown incomplete: " + joined);
  }
  update_session(id, [](StackSession& s) {
    s.state = SessionState::Stopped;
    s.failure.reset();
  });
  std::lock_guard lock(mutex_);
  return sessions_.at(id);
}

StackSession Orchestrator::start_stack(const std::string& stack, StartPolicy policy, bool emulated) {
  StackSession s = submit_start(stack, policy, emulated).done.get();
  if (s.state == SessionState::Failed) {
    throw EngineError(EngineError::Kind::Failed, s.id, s.failure.value_or("start failed"));
  }
  return s;
}

StackSession Orchestrator::stop_stack() { return submit_stop().done.get(); }

std::optional<StackSession> Orchestrator::current_session() const {
  std::lock_guard lock(mutex_);
  auto latest = latest_id_locked();
  if (!latest) return std::nullopt;
  return sessions_.at(*latest);
}

std::vector<StackSession> Orchestrator::sessions() const {
  std::lock_guard lock(mutex_);
  std::vector<StackSession> out;
  for (const auto& id : order_) out.push_back(sessions_.at(id));
  return out;
}

void Orchestrator::restore_session(StackSession session) {
  std::lock_guard lock(mutex_);
  if (session.id.size() > 1 && session.id.front() == 's') {
    try {
      next_id_ = std::max(next_id_, static_cast<std::size_t>(std::stoul(session.id.substr(1))) + 1);
    } catch (const std::exception&) {
    }
  }
  if (!sessions_.count(session.id)) order_.push_back(session.id);
  sessions_[session.id] = std::move(session);
}

SettingsMap Orchestrator::settings() const {
  std::lock_guard lock(mutex_);
  return global_;
}

void Orchestrator::put_settings(SettingsMap settings) {
  auto result = std::make_shared<std::promise<void>>();
  std::future<void> future = result->get_future();
  enqueue([this, settings = std::move(settings), result] {
    try {
      std::function<void(const SettingsMap&)> sink;
      {
        std::lock_guard lock(mutex_);
        if (auto latest = latest_id_locked(); latest && is_active(sessions_.at(*latest).state)) {
          throw SettingsLocked(sessions_.at(*latest).stack);
        }
        const ValidationReport report = validate_settings(settings);
        if (report.has_errors()) throw ValidationFailed(report);
        sink = settings_sink_;
      }
      if (sink) sink(settings);
      {
        std::lock_guard lock(mutex_);
        global_ = settings;
      }
      result->set_value();
    } catch (...) {
      result->set_exception(std::current_exception());
    }
  });
  future.get();
}

void Orchestrator::set_settings_sink(std::function<void(const SettingsMap&)> sink) {
  std::lock_guard lock(mutex_);
  settings_sink_ = std::move(sink);
}

void Orchestrator::set_action_observer(std::function<void(const HostAction&)> observer) {
  std::lock_guard lock(mutex_);
  action_observer_ = std::move(observer);
}

void Orchestrator::set_session_observer(std::function<void(const std::vector<StackSession>&)> observer) {
  std::lock_guard lock(mutex_);
  session_observer_ = std::move(observer);
}

}  // namespace labcube
