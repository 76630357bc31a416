#include "labcube/lab.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "labcube/docker_engine.hpp"
#include "labcube/error.hpp"
#include "labcube/json_codec.hpp"

extern char** environ;

namespace labcube {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot read file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot write file");
    out << content;
    if (!out) throw IoError(path.string(), "write failed");
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(path.string(), ec.message());
}

EnvironmentMap process_environment() {
  EnvironmentMap env;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
  }
  return env;
}

LabConfig make_config(const fs::path& lab_dir, const EnvironmentMap& env) {
  LabConfig c;
  c.catalog_dir = lab_dir / "stacks";
  c.template_root = lab_dir / "templates";
  c.settings_file = lab_dir / "settings" / "global.env";
  c.subscribers_file = lab_dir / "settings" / "subscribers.env";
  c.networks_file = lab_dir / "networks.yaml";
  c.hosts_file = lab_dir / "hosts.yaml";
  auto get = [&](const char* key) -> const std::string* {
    auto it = env.find(key);
    return it == env.end() || it->second.empty() ? nullptr : &it->second;
  };
  if (const auto* v = get("CUBE_CATALOG")) {
    c.catalog_dir = *v;
    c.template_root = c.catalog_dir.parent_path() / "templates";
    c.networks_file = c.catalog_dir.parent_path() / "networks.yaml";
  }
  if (const auto* v = get("CUBE_SETTINGS")) {
    c.settings_file = *v;
    c.subscribers_file = c.settings_file.parent_path() / "subscribers.env";
  }
  if (const auto* v = get("CUBE_HOSTS")) c.hosts_file = *v;
  if (const auto* v = get("CUBE_BIND")) c.bind = *v;
  if (const auto* v = get("CUBE_STATE")) c.state_file = fs::path(*v);
  return c;
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0) throw SchemaError("bind", "expected host:port, got '" + bind + "'");
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(bind.substr(colon + 1), &used);
    if (used != bind.size() - colon - 1) throw std::invalid_argument(bind);
  } catch (const std::exception&) {
    throw SchemaError("bind", "bad port in '" + bind + "'");
  }
  if (port < 0 || port > 65535) throw SchemaError("bind", "port out of range in '" + bind + "'");
  return {bind.substr(0, colon), port};
}

void LabContext::save_state() const {
  if (!config.state_file) return;
  nlohmann::json sessions = nlohmann::json::array();
  for (const auto& s : orchestrator->sessions()) sessions.push_back(codec::session_record(s));
  nlohmann::json state{{"sessions", sessions},
                       {"lab", simulated ? simulated->to_json() : nlohmann::json(nullptr)}};
  write_file(*config.state_file, state.dump(1) + "\n");
}

std::unique_ptr<LabContext> load_lab(const LabConfig& config) {
  auto ctx = std::make_unique<LabContext>();
  ctx->config = config;

  StackCatalog catalog = load_catalog(config.catalog_dir);
  ctx->load_warnings.append(catalog.findings);

  EnvFile global = parse_env_file(read_file(config.settings_file));
  ctx->load_warnings.append(global.warnings);

  LabEnvironment env;
  env.template_root = config.template_root;
  if (fs::exists(config.subscribers_file)) {
    env.subscribers = parse_subscribers(read_file(config.subscribers_file));
  }
  env.networks = fs::exists(config.networks_file) ? parse_network_catalog(read_file(config.networks_file))
                                                  : default_network_catalog();
  env.hosts = fs::exists(config.hosts_file) ? parse_host_registry(read_file(config.hosts_file))
                                            : default_host_registry();
  ctx->load_warnings.append(validate_networks(env.networks));

  std::vector<StackSession> restored;
  std::optional<nlohmann::json> saved_lab;
  if (config.state_file && fs::exists(*config.state_file)) {
    nlohmann::json state;
    try {
      state = nlohmann::json::parse(read_file(*config.state_file));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(config.state_file->string(), e.what());
    }
    for (const auto& r : state.value("sessions", nlohmann::json::array())) {
      restored.push_back(codec::session_from_record(r));
    }
    if (state.contains("lab") && !state["lab"].is_null()) saved_lab = state["lab"];
  }

  // Endpoints: every sim:// host shares one simulated lab.
  std::vector<std::pair<std::string, EngineEndpoint>> engines{{env.hosts.controller, env.hosts.controller_engine}};
  std::vector<std::pair<std::string, EngineEndpoint>> channels;
  for (const auto& r : env.hosts.ran_hosts) {
    engines.emplace_back(r.name, r.engine);
    channels.emplace_back(r.name, r.channel);
  }
  bool any_real = false;
  std::vector<std::string> sim_hosts;
  for (const auto& [host, ep] : engines) {
    if (ep.kind == EndpointKind::Simulated) sim_hosts.push_back(host);
    else any_real = true;
  }
  for (const auto& [host, ep] : channels) {
    if (ep.kind == EndpointKind::Real) any_real = true;
  }
  bool any_sim_channel = false;
  for (const auto& [host, ep] : channels) any_sim_channel |= ep.kind == EndpointKind::Simulated;
  if (!sim_hosts.empty() || any_sim_channel) {
    ctx->simulated = saved_lab ? SimulatedLab::from_json(*saved_lab) : SimulatedLab::create(sim_hosts);
  }

  EnginePool pool;
  for (const auto& [host, ep] : engines) {
    if (ep.kind == EndpointKind::Simulated) pool.add_engine(host, ctx->simulated->engine(host));
    else pool.add_engine(host, std::make_shared<docker::DockerEngine>(ep, config.deploy_root.string()));
  }
  for (const auto& [host, ep] : channels) {
    if (ep.kind == EndpointKind::Simulated) pool.add_channel(host, ctx->simulated->channel(host));
    else pool.add_channel(host, std::make_shared<docker::SshChannel>(ep));
  }
  std::shared_ptr<SimulatedLab> sim = ctx->simulated;
  if (any_real) {
    pool.set_ticker([sim] {
      if (sim) sim->tick();
      std::this_thread::sleep_for(std::chrono::seconds(1));
    });
  } else {
    pool.set_ticker([sim] { sim->tick(); });
    pool.set_clock([sim] { return sim->now(); });
  }

  ctx->orchestrator = std::make_unique<Orchestrator>(std::move(catalog), std::move(global.values), std::move(env),
                                                     std::move(pool), config.orchestrator);
  for (auto& s : restored) ctx->orchestrator->restore_session(std::move(s));
  const fs::path settings_file = config.settings_file;
  ctx->orchestrator->set_settings_sink(
      [settings_file](const SettingsMap& s) { write_file(settings_file, format_env_file(s)); });
  return ctx;
}

}  // namespace labcube
