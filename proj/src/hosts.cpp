#include "labcube/hosts.hpp"

#include <set>

#include "labcube/error.hpp"
#include "labcube/yaml.hpp"

namespace labcube {

EngineEndpoint make_endpoint(std::string host, std::string address) {
  EngineEndpoint endpoint{std::move(host), std::move(address), EndpointKind::Real};
  const std::string& a = endpoint.address;
  if (a.starts_with("sim://")) {
    endpoint.kind = EndpointKind::Simulated;
  } else if (a.starts_with("unix://") || a.starts_with("tcp://") || a.starts_with("ssh://")) {
    if (a.find("://") + 3 >= a.size()) throw SchemaError(endpoint.host, "endpoint has no target");
  } else {
    throw SchemaError(endpoint.host, "unsupported endpoint '" + a + "'");
  }
  return endpoint;
}

const RanHost* HostRegistry::find_ran_host(std::string_view name) const {
  for (const auto& h : ran_hosts) {
    if (h.name == name) return &h;
  }
  return nullptr;
}

bool HostRegistry::knows(std::string_view name) const {
  return is_controller(name) || find_ran_host(name) != nullptr;
}

std::vector<std::string> HostRegistry::host_names() const {
  std::vector<std::string> names{controller};
  for (const auto& h : ran_hosts) {
    if (h.name != controller) names.push_back(h.name);
  }
  return names;
}

const EngineEndpoint& HostRegistry::engine_endpoint(std::string_view host) const {
  if (is_controller(host)) return controller_engine;
  if (const auto* h = find_ran_host(host)) return h->engine;
  throw UnknownHost(std::string(host));
}

namespace {

std::string required_scalar(const yaml::Node& map, std::string_view key, const std::string& path) {
  const yaml::Node* node = map.find(key);
  if (!node) throw SchemaError(path + "." + std::string(key), "required");
  if (!node->is_scalar() || node->as_scalar().empty()) {
    throw SchemaError(path + "." + std::string(key), "expected a non-empty scalar");
  }
  return node->as_scalar();
}

void check_keys(const yaml::Node& map, std::initializer_list<std::string_view> allowed,
                const std::string& path) {
  std::set<std::string> seen;
  for (const auto& [k, v] : map.entries()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) throw SchemaError(path.empty() ? k : path + "." + k, "unknown key");
    if (!seen.insert(k).second) throw SchemaError(path.empty() ? k : path + "." + k, "duplicate key");
  }
}

}  // namespace

HostRegistry parse_host_registry(std::string_view text) {
  const yaml::Node root = yaml::parse(text);
  if (!root.is_mapping()) throw SchemaError("hosts", "expected a mapping");
  check_keys(root, {"controller", "controller_engine", "ran_hosts"}, "");

  HostRegistry registry;
  registry.ran_hosts.clear();
  registry.controller = required_scalar(root, "controller", "hosts");
  std::string engine = "sim://" + registry.controller;
  if (root.find("controller_engine")) engine = required_scalar(root, "controller_engine", "hosts");
  registry.controller_engine = make_endpoint(registry.controller, engine);

  std::set<std::string> names{registry.controller};
  if (const yaml::Node* hosts = root.find("ran_hosts"); hosts && !hosts->is_null()) {
    if (!hosts->is_sequence()) throw SchemaError("ran_hosts", "expected a sequence");
    for (std::size_t i = 0; i < hosts->items().size(); ++i) {
      const yaml::Node& item = hosts->items()[i];
      const std::string path = "ran_hosts[" + std::to_string(i) + "]";
      if (!item.is_mapping()) throw SchemaError(path, "expected a mapping");
      check_keys(item, {"name", "engine", "channel"}, path);
      RanHost host;
      host.name = required_scalar(item, "name", path);
      if (!names.insert(host.name).second) {
        throw SchemaError(path + ".name", "duplicate host '" + host.name + "'");
      }
      host.engine = make_endpoint(host.name, required_scalar(item, "engine", path));
      host.channel = make_endpoint(host.name, item.find("channel")
                                                  ? required_scalar(item, "channel", path)
                                                  : host.engine.address);
      registry.ran_hosts.push_back(std::move(host));
    }
  }
  return registry;
}

HostRegistry default_host_registry() {
  HostRegistry registry;
  for (const char* name : {"ran-1", "ran-2"}) {
    const std::string address = std::string("sim://") + name;
    registry.ran_hosts.push_back(
        {name, make_endpoint(name, address), make_endpoint(name, address)});
  }
  return registry;
}

}  // namespace labcube
