#include "labcube/stack_model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "labcube/error.hpp"
#include "labcube/yaml.hpp"

namespace labcube {

std::string to_string(Generation generation) {
  switch (generation) {
    case Generation::G2: return "G2";
    case Generation::G4: return "G4";
    case Generation::G5SA: return "G5SA";
    case Generation::Emulated: return "EMULATED";
  }
  return "G5SA";
}

std::string to_string(ServiceRole role) {
  switch (role) {
    case ServiceRole::CoreNf: return "CORE_NF";
    case ServiceRole::Ran: return "RAN";
    case ServiceRole::Ims: return "IMS";
    case ServiceRole::Db: return "DB";
    case ServiceRole::Util: return "UTIL";
  }
  return "CORE_NF";
}

std::optional<Generation> parse_generation(std::string_view text) {
  for (auto g : {Generation::G2, Generation::G4, Generation::G5SA, Generation::Emulated}) {
    if (to_string(g) == text) return g;
  }
  return std::nullopt;
}

std::optional<ServiceRole> parse_service_role(std::string_view text) {
  for (auto r : {ServiceRole::CoreNf, ServiceRole::Ran, ServiceRole::Ims, ServiceRole::Db,
                 ServiceRole::Util}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

const NetworkAttachment* ServiceSpec::attachment(std::string_view network) const {
  for (const auto& a : attachments) {
    if (a.network == network) return &a;
  }
  return nullptr;
}

const ServiceSpec* StackManifest::find_service(std::string_view name) const {
  for (const auto& s : services) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty() || !std::isalnum(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void check_keys(const yaml::Node& map, std::initializer_list<std::string_view> allowed,
                const std::string& path) {
  std::set<std::string> seen;
  for (const auto& [k, v] : map.entries()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw SchemaError(join(path, k), "unknown key");
    }
    if (!seen.insert(k).second) throw SchemaError(join(path, k), "duplicate key");
  }
}

const std::string& expect_scalar(const yaml::Node& node, const std::string& path) {
  if (!node.is_scalar()) {
    throw SchemaError(path, "expected a scalar, got " + std::string(yaml::kind_name(node.kind())));
  }
  return node.as_scalar();
}

std::string required_scalar(const yaml::Node& map, std::string_view key, const std::string& path) {
  const yaml::Node* node = map.find(key);
  if (!node) throw SchemaError(join(path, key), "required");
  return expect_scalar(*node, join(path, key));
}

// Missing or explicitly empty sequences both read as empty.
const std::vector<yaml::Node>& optional_sequence(const yaml::Node& map, std::string_view key,
                                                 const std::string& path) {
  static const std::vector<yaml::Node> kEmpty;
  const yaml::Node* node = map.find(key);
  if (!node || node->is_null()) return kEmpty;
  if (!node->is_sequence()) throw SchemaError(join(path, key), "expected a sequence");
  return node->items();
}

NetworkAttachment parse_attachment(const yaml::Node& node, const std::string& path) {
  if (!node.is_mapping()) throw SchemaError(path, "expected a mapping");
  check_keys(node, {"network", "static_ip", "ip_key"}, path);
  NetworkAttachment attachment;
  attachment.network = required_scalar(node, "network", path);
  if (!is_identifier(attachment.network)) throw SchemaError(path + ".network", "invalid name");
  const yaml::Node* ip = node.find("static_ip");
  const yaml::Node* key = node.find("ip_key");
  if (ip && key) throw SchemaError(path, "static_ip and ip_key are mutually exclusive");
  if (ip) {
    const std::string& text = expect_scalar(*ip, path + ".static_ip");
    auto address = Ipv4Address::parse(text);
    if (!address) throw SchemaError(path + ".static_ip", "'" + text + "' is not an IPv4 address");
    attachment.static_ip = *address;
  }
  if (key) {
    const std::string& text = expect_scalar(*key, path + ".ip_key");
    if (!SettingsMap::is_valid_key(text)) throw SchemaError(path + ".ip_key", "invalid settings key");
    attachment.ip_setting_key = text;
  }
  return attachment;
}

bool is_image_reference(std::string_view image) {
  const auto slash = image.rfind('/');
  const auto colon = image.rfind(':');
  return colon != std::string_view::npos && (slash == std::string_view::npos || colon > slash) &&
         colon > 0 && colon + 1 < image.size() &&
         image.find_first_of(" \t") == std::string_view::npos;
}

ServiceSpec parse_service(const std::string& name, const yaml::Node& node, const std::string& path) {
  if (!node.is_mapping()) throw SchemaError(path, "expected a mapping");
  check_keys(node,
             {"image", "role", "target_host", "depends_on", "attachments", "templates", "command"},
             path);
  ServiceSpec service;
  service.name = name;
  service.image = required_scalar(node, "image", path);
  if (!is_image_reference(service.image)) {
    throw SchemaError(path + ".image", "expected name:tag, got '" + service.image + "'");
  }
  const std::string role = required_scalar(node, "role", path);
  auto parsed_role = parse_service_role(role);
  if (!parsed_role) throw SchemaError(path + ".role", "unknown role '" + role + "'");
  service.role = *parsed_role;

  if (const yaml::Node* host = node.find("target_host")) {
    service.target_host = expect_scalar(*host, path + ".target_host");
    if (!is_identifier(service.target_host)) throw SchemaError(path + ".target_host", "invalid host name");
  }
  if (const yaml::Node* command = node.find("command")) {
    service.command = expect_scalar(*command, path + ".command");
  }

  std::set<std::string> deps;
  for (const auto& dep : optional_sequence(node, "depends_on", path)) {
    const std::string& d = expect_scalar(dep, path + ".depends_on");
    if (!deps.insert(d).second) throw SchemaError(path + ".depends_on", "duplicate dependency '" + d + "'");
    service.depends_on.push_back(d);
  }

  const auto& attachments = optional_sequence(node, "attachments", path);
  for (std::size_t i = 0; i < attachments.size(); ++i) {
    auto attachment =
        parse_attachment(attachments[i], path + ".attachments[" + std::to_string(i) + "]");
    if (service.attachment(attachment.network)) {
      throw SchemaError(path + ".attachments",
                        "more than one attachment to network '" + attachment.network + "'");
    }
    service.attachments.push_back(std::move(attachment));
  }

  const auto& templates = optional_sequence(node, "templates", path);
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const std::string item_path = path + ".templates[" + std::to_string(i) + "]";
    const yaml::Node& pair = templates[i];
    if (!pair.is_sequence() || pair.items().size() != 2) {
      throw SchemaError(item_path, "expected [source, target]");
    }
    TemplateBinding binding{expect_scalar(pair.items()[0], item_path),
                            expect_scalar(pair.items()[1], item_path)};
    if (binding.source.empty() || binding.target.empty()) {
      throw SchemaError(item_path, "template paths must be non-empty");
    }
    service.templates.push_back(std::move(binding));
  }
  return service;
}

}  // namespace

StackManifest parse_manifest(std::string_view text) {
  const yaml::Node root = yaml::parse(text);
  if (!root.is_mapping()) throw SchemaError("manifest", "expected a mapping at the top level");
  check_keys(root, {"name", "description", "generation", "networks", "overrides", "services"}, "");

  StackManifest manifest;
  manifest.name = required_scalar(root, "name", "");
  if (!is_identifier(manifest.name)) throw SchemaError("name", "invalid stack name");
  if (const yaml::Node* d = root.find("description")) {
    manifest.description = d->is_null() ? "" : expect_scalar(*d, "description");
  }
  const std::string generation = required_scalar(root, "generation", "");
  auto parsed = parse_generation(generation);
  if (!parsed) throw SchemaError("generation", "unknown generation '" + generation + "'");
  manifest.generation = *parsed;

  std::set<std::string> networks;
  for (const auto& n : optional_sequence(root, "networks", "")) {
    const std::string& name = expect_scalar(n, "networks");
    if (!is_identifier(name)) throw SchemaError("networks", "invalid network name '" + name + "'");
    if (!networks.insert(name).second) throw SchemaError("networks", "duplicate network '" + name + "'");
    manifest.networks.push_back(name);
  }

  if (const yaml::Node* overrides = root.find("overrides"); overrides && !overrides->is_null()) {
    if (!overrides->is_mapping()) throw SchemaError("overrides", "expected a mapping");
    for (const auto& [k, v] : overrides->entries()) {
      if (!SettingsMap::is_valid_key(k)) throw SchemaError("overrides." + k, "invalid settings key");
      if (manifest.overrides.contains(k)) throw SchemaError("overrides." + k, "duplicate key");
      manifest.overrides.set(k, v.is_null() ? "" : expect_scalar(v, "overrides." + k));
    }
  }

  const yaml::Node* services = root.find("services");
  if (!services) throw SchemaError("services", "required");
  if (!services->is_mapping()) throw SchemaError("services", "expected a mapping of services");
  for (const auto& [name, node] : services->entries()) {
    if (!is_identifier(name)) throw SchemaError("services." + name, "invalid service name");
    if (manifest.find_service(name)) throw DuplicateService(name);
    manifest.services.push_back(parse_service(name, node, "services." + name));
  }
  return manifest;
}

std::string serialize_manifest(const StackManifest& manifest) {
  using yaml::Node;
  Node root = Node::mapping();
  root.set("name", Node::scalar(manifest.name));
  root.set("description", Node::scalar(manifest.description));
  root.set("generation", Node::scalar(to_string(manifest.generation)));
  Node& networks = root.set("networks", Node::sequence());
  for (const auto& n : manifest.networks) networks.push_back(Node::scalar(n));
  if (!manifest.overrides.empty()) {
    Node& overrides = root.set("overrides", Node::mapping());
    for (const auto& [k, v] : manifest.overrides) overrides.set(k, Node::scalar(v));
  }
  Node& services = root.set("services", Node::mapping());
  for (const auto& s : manifest.services) {
    Node& svc = services.set(s.name, Node::mapping());
    svc.set("image", Node::scalar(s.image));
    svc.set("role", Node::scalar(to_string(s.role)));
    if (s.target_host != kDefaultTargetHost) svc.set("target_host", Node::scalar(s.target_host));
    if (s.command) svc.set("command", Node::scalar(*s.command));
    if (!s.depends_on.empty()) {
      Node& deps = svc.set("depends_on", Node::sequence());
      for (const auto& d : s.depends_on) deps.push_back(Node::scalar(d));
    }
    if (!s.attachments.empty()) {
      Node& attachments = svc.set("attachments", Node::sequence());
      for (const auto& a : s.attachments) {
        Node& item = attachments.push_back(Node::mapping());
        item.set("network", Node::scalar(a.network));
        if (a.static_ip) item.set("static_ip", Node::scalar(a.static_ip->to_string()));
        if (a.ip_setting_key) item.set("ip_key", Node::scalar(*a.ip_setting_key));
      }
    }
    if (!s.templates.empty()) {
      Node& templates = svc.set("templates", Node::sequence());
      for (const auto& t : s.templates) {
        Node& pair = templates.push_back(Node::sequence());
        pair.push_back(Node::scalar(t.source));
        pair.push_back(Node::scalar(t.target));
      }
    }
  }
  return yaml::emit(root);
}

namespace {

// Follows dependencies among `remaining` until a service repeats.
std::string describe_cycle(const StackManifest& manifest, const std::set<std::string>& remaining) {
  std::vector<std::string> path{*remaining.begin()};
  std::map<std::string, std::size_t> seen{{path.front(), 0}};
  while (true) {
    const ServiceSpec* svc = manifest.find_service(path.back());
    std::string next;
    for (const auto& d : svc->depends_on) {
      if (remaining.count(d)) {
        next = d;
        break;
      }
    }
    if (next.empty()) break;
    if (auto it = seen.find(next); it != seen.end()) {
      std::string chain;
      for (std::size_t i = it->second; i < path.size(); ++i) chain += path[i] + " -> ";
      return chain + next;
    }
    seen[next] = path.size();
    path.push_back(next);
  }
  return path.front();
}

}  // namespace

std::vector<std::string> topological_order(const StackManifest& manifest) {
  std::set<std::string> remaining;
  for (const auto& s : manifest.services) remaining.insert(s.name);
  std::vector<std::string> order;
  order.reserve(manifest.services.size());

  auto ready = [&](const ServiceSpec& s) {
    if (!remaining.count(s.name)) return false;
    return std::none_of(s.depends_on.begin(), s.depends_on.end(), [&](const std::string& d) {
      return remaining.count(d) > 0 && manifest.find_service(d) != nullptr;
    });
  };

  while (!remaining.empty()) {
    const ServiceSpec* pick = nullptr;
    for (const auto& s : manifest.services) {
      if (ready(s) && s.role != ServiceRole::Ran) {
        pick = &s;
        break;
      }
    }
    if (!pick) {
      for (const auto& s : manifest.services) {
        if (ready(s)) {
          pick = &s;
          break;
        }
      }
    }
    if (!pick) throw CycleError(describe_cycle(manifest, remaining));
    order.push_back(pick->name);
    remaining.erase(pick->name);
  }
  return order;
}

ValidationReport validate_manifest(const StackManifest& manifest, const NetworkCatalog& networks,
                                   const HostRegistry& hosts, const ResolvedSettings& settings) {
  ValidationReport report;
  const std::set<std::string> declared(manifest.networks.begin(), manifest.networks.end());

  for (const auto& n : manifest.networks) {
    if (!networks.find(n)) report.add("UNKNOWN_NETWORK", n, "network is not in the network catalog");
  }

  bool addresses_resolved = true;
  for (const auto& s : manifest.services) {
    if (!hosts.knows(s.target_host)) {
      report.add("UNKNOWN_HOST", s.name, "target host '" + s.target_host + "' is not registered");
    } else if (!hosts.is_controller(s.target_host) && s.role != ServiceRole::Ran) {
      report.add("REMOTE_NON_RAN", s.name,
                 "only RAN services may run on a RAN host (role is " + to_string(s.role) + ")");
    }

    for (const auto& a : s.attachments) {
      const std::string subject = s.name + "/" + a.network;
      if (!declared.count(a.network)) {
        report.add("NETWORK_NOT_DECLARED", subject, "network is not listed under 'networks'");
        if (!networks.find(a.network)) {
          report.add("UNKNOWN_NETWORK", subject, "network is not in the network catalog");
        }
      }
      if (a.ip_setting_key) {
        const std::string* value = settings.find(*a.ip_setting_key);
        if (!value) {
          report.add("UNRESOLVED_SETTING", subject, "setting '" + *a.ip_setting_key + "' is not defined");
          addresses_resolved = false;
        } else if (!Ipv4Address::parse(*value)) {
          report.add("INVALID_ADDRESS", subject,
                     "setting '" + *a.ip_setting_key + "' = '" + *value + "' is not an IPv4 address");
          addresses_resolved = false;
        }
      } else if (!a.static_ip && s.role != ServiceRole::Util) {
        report.add("DYNAMIC_ADDRESS", subject,
                   "only UTIL services may use engine-assigned addresses");
      }
    }

    for (const auto& d : s.depends_on) {
      if (d == s.name) {
        report.add("DEPENDENCY_CYCLE", s.name, "service depends on itself");
      } else if (!manifest.find_service(d)) {
        report.add("UNKNOWN_DEPENDENCY", s.name, "depends on unknown service '" + d + "'");
      }
    }
  }

  if (!report.has_code("DEPENDENCY_CYCLE")) {
    try {
      topological_order(manifest);
    } catch (const CycleError& e) {
      report.add("DEPENDENCY_CYCLE", e.chain(), "services depend on each other");
    }
  }

  if (addresses_resolved) {
    const AddressPlan plan = build_address_plan(manifest, settings);
    for (const auto& c : check_address_plan(plan, networks)) {
      if (c.kind == ConflictKind::UnknownNetwork) continue;  // reported above
      std::string services;
      for (const auto& s : c.services) services += (services.empty() ? "" : ", ") + s;
      report.add("ADDRESS_CONFLICT", c.network + "/" + c.address.to_string(),
                 to_string(c.kind) + ": " + services);
    }
  }
  return report;
}

StackManifest make_emulated_variant(const StackManifest& manifest) {
  if (manifest.generation != Generation::G5SA) {
    throw SchemaError(manifest.name, "emulated variants exist only for 5G SA stacks");
  }
  StackManifest variant = manifest;
  variant.name = manifest.name + "-emulated";
  variant.generation = Generation::Emulated;
  variant.description = manifest.description + " (software gNB and UE)";
  variant.services.clear();

  std::set<std::string> replaced;
  std::vector<std::string> ran_deps;
  for (const auto& s : manifest.services) {
    if (s.role == ServiceRole::Ran) {
      replaced.insert(s.name);
      for (const auto& d : s.depends_on) {
        if (std::find(ran_deps.begin(), ran_deps.end(), d) == ran_deps.end()) ran_deps.push_back(d);
      }
    }
  }
  if (replaced.empty()) throw SchemaError(manifest.name, "stack has no RAN service to emulate");

  bool inserted = false;
  for (const auto& s : manifest.services) {
    if (replaced.count(s.name)) {
      if (inserted) continue;
      inserted = true;
      ServiceSpec gnb;
      gnb.name = "ueransim-gnb";
      gnb.image = "labcube/ueransim:3.2.6";
      gnb.role = ServiceRole::Ran;
      gnb.attachments = {{"corenet", std::nullopt, "UERANSIM_GNB_IP"}};
      gnb.templates = {{"ueransim/gnb.yaml.tmpl", "/etc/ueransim/gnb.yaml"}};
      gnb.depends_on = ran_deps;
      gnb.command = "nr-gnb -c /etc/ueransim/gnb.yaml";
      ServiceSpec ue;
      ue.name = "ueransim-ue";
      ue.image = "labcube/ueransim:3.2.6";
      ue.role = ServiceRole::Ran;
      ue.attachments = {{"corenet", std::nullopt, "UERANSIM_UE_IP"}};
      ue.templates = {{"ueransim/ue.yaml.tmpl", "/etc/ueransim/ue.yaml"}};
      ue.depends_on = {"ueransim-gnb"};
      ue.command = "nr-ue -c /etc/ueransim/ue.yaml";
      variant.services.push_back(std::move(gnb));
      variant.services.push_back(std::move(ue));
      continue;
    }
    ServiceSpec copy = s;
    for (auto& d : copy.depends_on) {
      if (replaced.count(d)) d = "ueransim-gnb";
    }
    copy.depends_on.erase(std::unique(copy.depends_on.begin(), copy.depends_on.end()),
                          copy.depends_on.end());
    variant.services.push_back(std::move(copy));
  }

  std::set<std::string> used;
  for (const auto& s : variant.services) {
    for (const auto& a : s.attachments) used.insert(a.network);
  }
  std::erase_if(variant.networks, [&](const std::string& n) { return !used.count(n); });
  return variant;
}

const CatalogEntry* StackCatalog::find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.manifest.name == name) return &e;
  }
  return nullptr;
}

StackCatalog load_catalog(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError(root.string(), "not a readable directory");

  std::vector<fs::path> files;
  for (fs::directory_iterator it(root, ec), end; !ec && it != end; it.increment(ec)) {
    const auto ext = it->path().extension();
    if (it->is_regular_file() && (ext == ".yaml" || ext == ".yml")) files.push_back(it->path());
  }
  if (ec) throw IoError(root.string(), ec.message());
  std::sort(files.begin(), files.end());

  StackCatalog catalog;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      catalog.findings.add("IO_ERROR", file.filename().string(), "cannot read file");
      continue;
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
      StackManifest manifest = parse_manifest(text.str());
      if (catalog.find(manifest.name)) {
        catalog.findings.add("DUPLICATE_STACK", file.filename().string(),
                             "stack '" + manifest.name + "' is already defined");
        continue;
      }
      catalog.entries.push_back({std::move(manifest), file});
    } catch (const Error& e) {
      catalog.findings.add("PARSE_ERROR", file.filename().string(), e.code() + ": " + e.what());
    }
  }
  std::sort(catalog.entries.begin(), catalog.entries.end(),
            [](const CatalogEntry& a, const CatalogEntry& b) { return a.manifest.name < b.manifest.name; });
  return catalog;
}

CatalogList list_catalog(const std::filesystem::path& root) {
  StackCatalog catalog = load_catalog(root);
  CatalogList list;
  list.findings = std::move(catalog.findings);
  for (const auto& e : catalog.entries) {
    list.entries.push_back({e.manifest.name, e.manifest.generation, e.manifest.description,
                            e.manifest.services.size()});
  }
  return list;
}

}  // namespace labcube
