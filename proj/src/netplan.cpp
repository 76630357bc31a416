#include "labcube/netplan.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "labcube/error.hpp"
#include "labcube/hash.hpp"
#include "labcube/stack_model.hpp"
#include "labcube/yaml.hpp"

namespace labcube {

std::string to_string(NetworkKind kind) {
  switch (kind) {
    case NetworkKind::MacvlanTrunk: return "MACVLAN_TRUNK";
    case NetworkKind::BridgeWan: return "BRIDGE_WAN";
    case NetworkKind::Isolated: return "ISOLATED";
  }
  return "ISOLATED";
}

std::optional<NetworkKind> parse_network_kind(std::string_view text) {
  for (auto k : {NetworkKind::MacvlanTrunk, NetworkKind::BridgeWan, NetworkKind::Isolated}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

const NetworkSpec* NetworkCatalog::find(std::string_view name) const {
  for (const auto& n : networks) {
    if (n.name == name) return &n;
  }
  return nullptr;
}

namespace {

const std::string& scalar_field(const yaml::Node& map, std::string_view key, const std::string& path,
                                bool required) {
  static const std::string kEmpty;
  const yaml::Node* node = map.find(key);
  if (!node) {
    if (required) throw SchemaError(path + "." + std::string(key), "required");
    return kEmpty;
  }
  if (!node->is_scalar()) throw SchemaError(path + "." + std::string(key), "expected a scalar");
  return node->as_scalar();
}

}  // namespace

NetworkCatalog parse_network_catalog(std::string_view text) {
  const yaml::Node root = yaml::parse(text);
  if (!root.is_mapping()) throw SchemaError("networks", "expected a mapping");
  for (const auto& [k, v] : root.entries()) {
    if (k != "networks") throw SchemaError(k, "unknown key");
  }
  const yaml::Node* networks = root.find("networks");
  if (!networks || !networks->is_mapping()) throw SchemaError("networks", "expected a mapping");

  NetworkCatalog catalog;
  for (const auto& [name, node] : networks->entries()) {
    const std::string path = "networks." + name;
    if (!node.is_mapping()) throw SchemaError(path, "expected a mapping");
    for (const auto& [k, v] : node.entries()) {
      if (k != "kind" && k != "subnet" && k != "gateway" && k != "vlan_id") {
        throw SchemaError(path + "." + k, "unknown key");
      }
    }
    NetworkSpec spec;
    spec.name = name;
    const std::string& kind = scalar_field(node, "kind", path, true);
    auto parsed_kind = parse_network_kind(kind);
    if (!parsed_kind) throw SchemaError(path + ".kind", "unknown kind '" + kind + "'");
    spec.kind = *parsed_kind;
    const std::string& subnet = scalar_field(node, "subnet", path, true);
    auto cidr = Ipv4Cidr::parse(subnet);
    if (!cidr) throw SchemaError(path + ".subnet", "'" + subnet + "' is not an IPv4 CIDR");
    spec.subnet = *cidr;
    if (node.find("gateway")) {
      const std::string& gw = scalar_field(node, "gateway", path, true);
      auto address = Ipv4Address::parse(gw);
      if (!address) throw SchemaError(path + ".gateway", "'" + gw + "' is not an IPv4 address");
      spec.gateway = *address;
    }
    if (node.find("vlan_id")) {
      const std::string& vlan = scalar_field(node, "vlan_id", path, true);
      try {
        std::size_t used = 0;
        spec.vlan_id = std::stoi(vlan, &used);
        if (used != vlan.size()) throw std::invalid_argument(vlan);
      } catch (const std::exception&) {
        throw SchemaError(path + ".vlan_id", "'" + vlan + "' is not an integer");
      }
    }
    catalog.networks.push_back(std::move(spec));
  }
  return catalog;
}

std::string serialize_network_catalog(const NetworkCatalog& catalog) {
  using yaml::Node;
  Node root = Node::mapping();
  Node& networks = root.set("networks", Node::mapping());
  for (const auto& n : catalog.networks) {
    Node& spec = networks.set(n.name, Node::mapping());
    spec.set("kind", Node::scalar(to_string(n.kind)));
    spec.set("subnet", Node::scalar(n.subnet.to_string()));
    if (n.gateway) spec.set("gateway", Node::scalar(n.gateway->to_string()));
    if (n.vlan_id) spec.set("vlan_id", Node::scalar(std::to_string(*n.vlan_id)));
  }
  return yaml::emit(root);
}

NetworkCatalog default_network_catalog() {
  return parse_network_catalog(
      "networks:\n"
      "  corenet:\n"
      "    kind: MACVLAN_TRUNK\n"
      "    subnet: 10.5.0.0/24\n"
      "    gateway: 10.5.0.1\n"
      "    vlan_id: 5\n"
      "  extnet:\n"
      "    kind: BRIDGE_WAN\n"
      "    subnet: 10.6.0.0/24\n"
      "    gateway: 10.6.0.1\n"
      "  rfnet:\n"
      "    kind: ISOLATED\n"
      "    subnet: 192.168.40.0/24\n");
}

ValidationReport validate_networks(const NetworkCatalog& catalog) {
  ValidationReport report;
  std::set<std::string> names;
  for (const auto& n : catalog.networks) {
    if (!names.insert(n.name).second) report.add("DUPLICATE_NAME", n.name, "network defined twice");
    if (n.gateway && !n.subnet.contains(*n.gateway)) {
      report.add("GATEWAY_OUTSIDE_SUBNET", n.name,
                 n.gateway->to_string() + " is outside " + n.subnet.to_string());
    }
    if (n.vlan_id && n.kind != NetworkKind::MacvlanTrunk) {
      report.add("VLAN_MISUSE", n.name, "vlan_id is only valid on MACVLAN_TRUNK networks");
    } else if (!n.vlan_id && n.kind == NetworkKind::MacvlanTrunk) {
      report.add("VLAN_MISUSE", n.name, "MACVLAN_TRUNK networks need a vlan_id");
    } else if (n.vlan_id && (*n.vlan_id < 1 || *n.vlan_id > 4094)) {
      report.add("VLAN_MISUSE", n.name, "vlan_id must be within 1-4094");
    }
  }
  for (std::size_t i = 0; i < catalog.networks.size(); ++i) {
    for (std::size_t j = i + 1; j < catalog.networks.size(); ++j) {
      const auto& a = catalog.networks[i];
      const auto& b = catalog.networks[j];
      if (a.subnet.overlaps(b.subnet)) {
        report.add("OVERLAP", a.name + "/" + b.name,
                   a.subnet.to_string() + " overlaps " + b.subnet.to_string());
      }
    }
  }
  return report;
}

std::string derive_mac(std::string_view service, std::string_view network) {
  std::string key(service);
  key.push_back('\0');
  key.append(network);
  const auto digest = sha256(key);
  char buf[18];
  std::snprintf(buf, sizeof buf, "02:%02x:%02x:%02x:%02x:%02x", digest[0], digest[1], digest[2],
                digest[3], digest[4]);
  return buf;
}

std::vector<AddressAssignment> AddressPlan::for_service(std::string_view service) const {
  std::vector<AddressAssignment> out;
  for (const auto& a : assignments) {
    if (a.service == service) out.push_back(a);
  }
  return out;
}

const AddressAssignment* AddressPlan::find(std::string_view service, std::string_view network) const {
  for (const auto& a : assignments) {
    if (a.service == service && a.network == network) return &a;
  }
  return nullptr;
}

AddressPlan build_address_plan(const StackManifest& manifest, const ResolvedSettings& settings) {
  AddressPlan plan;
  for (const auto& s : manifest.services) {
    for (const auto& a : s.attachments) {
      std::optional<Ipv4Address> address = a.static_ip;
      if (a.ip_setting_key) {
        const std::string* value = settings.find(*a.ip_setting_key);
        if (!value) throw UnresolvedAddressKey(s.name, *a.ip_setting_key);
        address = Ipv4Address::parse(*value);
        if (!address) throw UnparsableAddress(s.name, *value);
      }
      if (!address) continue;
      plan.assignments.push_back({s.name, a.network, *address, derive_mac(s.name, a.network)});
    }
  }
  return plan;
}

std::string to_string(ConflictKind kind) {
  switch (kind) {
    case ConflictKind::Duplicate: return "DUPLICATE";
    case ConflictKind::OutOfSubnet: return "OUT_OF_SUBNET";
    case ConflictKind::GatewayCollision: return "GATEWAY_COLLISION";
    case ConflictKind::UnknownNetwork: return "UNKNOWN_NETWORK";
  }
  return "DUPLICATE";
}

std::vector<Conflict> check_address_plan(const AddressPlan& plan, const NetworkCatalog& catalog) {
  std::vector<Conflict> conflicts;
  std::map<std::pair<std::string, std::uint32_t>, std::vector<std::string>> by_slot;

  for (const auto& a : plan.assignments) {
    by_slot[{a.network, a.address.value()}].push_back(a.service);
    const NetworkSpec* net = catalog.find(a.network);
    if (!net) {
      conflicts.push_back({ConflictKind::UnknownNetwork, a.network, a.address, {a.service}});
      continue;
    }
    if (!net->subnet.is_usable_host(a.address)) {
      conflicts.push_back({ConflictKind::OutOfSubnet, a.network, a.address, {a.service}});
    } else if (net->gateway && *net->gateway == a.address) {
      conflicts.push_back({ConflictKind::GatewayCollision, a.network, a.address, {a.service}});
    }
  }
  for (auto& [slot, services] : by_slot) {
    if (services.size() < 2) continue;
    std::sort(services.begin(), services.end());
    conflicts.push_back(
        {ConflictKind::Duplicate, slot.first, Ipv4Address(slot.second), std::move(services)});
  }
  std::sort(conflicts.begin(), conflicts.end());
  conflicts.erase(std::unique(conflicts.begin(), conflicts.end()), conflicts.end());
  return conflicts;
}

}  // namespace labcube
