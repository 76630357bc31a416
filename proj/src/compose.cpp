#include "labcube/compose.hpp"

#include "labcube/error.hpp"
#include "labcube/yaml.hpp"

namespace labcube {

namespace {

using yaml::Node;

std::string driver_for(NetworkKind kind) {
  return kind == NetworkKind::MacvlanTrunk ? "macvlan" : "bridge";
}

const Node& require(const Node& map, std::string_view key, const std::string& path) {
  const Node* node = map.find(key);
  if (!node) throw SchemaError(path + "." + std::string(key), "required");
  return *node;
}

const std::string& require_scalar(const Node& map, std::string_view key, const std::string& path) {
  const Node& node = require(map, key, path);
  if (!node.is_scalar()) throw SchemaError(path + "." + std::string(key), "expected a scalar");
  return node.as_scalar();
}

const std::string* optional_scalar(const Node& map, std::string_view key, const std::string& path) {
  const Node* node = map.find(key);
  if (!node) return nullptr;
  if (!node->is_scalar()) throw SchemaError(path + "." + std::string(key), "expected a scalar");
  return &node->as_scalar();
}

Ipv4Address require_address(const std::string& text, const std::string& path) {
  auto address = Ipv4Address::parse(text);
  if (!address) throw SchemaError(path, "'" + text + "' is not an IPv4 address");
  return *address;
}

Mount parse_volume(const std::string& text, const std::string& path) {
  // ./<source>:<target>[:ro]
  if (text.rfind("./", 0) != 0) throw SchemaError(path, "volume source must start with './'");
  std::string rest = text.substr(2);
  if (rest.size() > 3 && rest.compare(rest.size() - 3, 3, ":ro") == 0) rest.resize(rest.size() - 3);
  const auto colon = rest.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
    throw SchemaError(path, "expected ./<source>:<target>");
  }
  return {rest.substr(0, colon), rest.substr(colon + 1)};
}

}  // namespace

std::string emit_compose(const ComposeDocument& doc) {
  Node root = Node::mapping();
  root.set("name", Node::scalar(doc.stack));
  Node& services = root.set("services", Node::mapping());
  for (const auto& s : doc.services) {
    const ContainerDescriptor& c = s.container;
    Node& svc = services.set(c.service, Node::mapping());
    svc.set("container_name", Node::scalar(c.name));
    svc.set("image", Node::scalar(c.image));
    if (c.command) svc.set("command", Node::scalar(*c.command));
    Node& labels = svc.set("labels", Node::mapping());
    labels.set("labcube.stack", Node::scalar(c.stack));
    labels.set("labcube.service", Node::scalar(c.service));
    labels.set("labcube.role", Node::scalar(to_string(c.role)));
    if (!c.mounts.empty()) {
      Node& volumes = svc.set("volumes", Node::sequence());
      for (const auto& m : c.mounts) volumes.push_back(Node::scalar("./" + m.source + ":" + m.target + ":ro"));
    }
    if (!s.networks.empty()) {
      Node& nets = svc.set("networks", Node::mapping());
      for (const auto& n : s.networks) {
        Node& entry = nets.set(n.network, Node::mapping());
        if (n.ip) entry.set("ipv4_address", Node::scalar(n.ip->to_string()));
        if (n.mac) entry.set("mac_address", Node::scalar(*n.mac));
      }
    }
  }
  if (!doc.networks.empty()) {
    Node& networks = root.set("networks", Node::mapping());
    for (const auto& n : doc.networks) {
      Node& net = networks.set(n.name, Node::mapping());
      net.set("driver", Node::scalar(driver_for(n.kind)));
      if (n.kind == NetworkKind::Isolated) net.set("internal", Node::scalar("true"));
      Node& ipam = net.set("ipam", Node::mapping());
      Node& config = ipam.set("config", Node::sequence());
      Node pool = Node::mapping();
      pool.set("subnet", Node::scalar(n.subnet.to_string()));
      if (n.gateway) pool.set("gateway", Node::scalar(n.gateway->to_string()));
      config.push_back(std::move(pool));
      Node& labels = net.set("labels", Node::mapping());
      labels.set("labcube.stack", Node::scalar(doc.stack));
      labels.set("labcube.kind", Node::scalar(to_string(n.kind)));
      if (n.vlan_id) labels.set("labcube.vlan_id", Node::scalar(std::to_string(*n.vlan_id)));
    }
  }
  return yaml::emit(root);
}

ComposeDocument parse_compose(std::string_view text) {
  const Node root = yaml::parse(text);
  if (!root.is_mapping()) throw SchemaError("compose", "expected a mapping");
  ComposeDocument doc;
  doc.stack = require_scalar(root, "name", "compose");

  const Node& services = require(root, "services", "compose");
  if (!services.is_mapping()) throw SchemaError("compose.services", "expected a mapping");
  for (const auto& [name, node] : services.entries()) {
    const std::string path = "services." + name;
    if (!node.is_mapping()) throw SchemaError(path, "expected a mapping");
    ComposeService svc;
    ContainerDescriptor& c = svc.container;
    c.service = name;
    c.stack = doc.stack;
    c.name = require_scalar(node, "container_name", path);
    c.image = require_scalar(node, "image", path);
    if (const auto* cmd = optional_scalar(node, "command", path)) c.command = *cmd;
    if (const Node* labels = node.find("labels")) {
      if (const auto* role = optional_scalar(*labels, "labcube.role", path + ".labels")) {
        auto parsed = parse_service_role(*role);
        if (!parsed) throw SchemaError(path + ".labels.labcube.role", "unknown role '" + *role + "'");
        c.role = *parsed;
      }
      if (const auto* stack = optional_scalar(*labels, "labcube.stack", path + ".labels")) {
        c.stack = *stack;
      }
    }
    if (const Node* volumes = node.find("volumes")) {
      if (!volumes->is_sequence()) throw SchemaError(path + ".volumes", "expected a sequence");
      for (const auto& v : volumes->items()) {
        if (!v.is_scalar()) throw SchemaError(path + ".volumes", "expected scalars");
        c.mounts.push_back(parse_volume(v.as_scalar(), path + ".volumes"));
      }
    }
    if (const Node* nets = node.find("networks")) {
      if (!nets->is_mapping()) throw SchemaError(path + ".networks", "expected a mapping");
      for (const auto& [net, opts] : nets->entries()) {
        ComposeNetworkRef ref{net, std::nullopt, std::nullopt};
        const std::string npath = path + ".networks." + net;
        if (opts.is_mapping()) {
          if (const auto* ip = optional_scalar(opts, "ipv4_address", npath)) {
            ref.ip = require_address(*ip, npath + ".ipv4_address");
          }
          if (const auto* mac = optional_scalar(opts, "mac_address", npath)) ref.mac = *mac;
        } else if (!opts.is_null()) {
          throw SchemaError(npath, "expected a mapping");
        }
        svc.networks.push_back(std::move(ref));
      }
    }
    doc.services.push_back(std::move(svc));
  }

  if (const Node* networks = root.find("networks")) {
    if (!networks->is_mapping()) throw SchemaError("compose.networks", "expected a mapping");
    for (const auto& [name, node] : networks->entries()) {
      const std::string path = "networks." + name;
      if (!node.is_mapping()) throw SchemaError(path, "expected a mapping");
      NetworkSpec spec;
      spec.name = name;
      const Node& labels = require(node, "labels", path);
      const std::string& kind = require_scalar(labels, "labcube.kind", path + ".labels");
      auto parsed = parse_network_kind(kind);
      if (!parsed) throw SchemaError(path + ".labels.labcube.kind", "unknown kind '" + kind + "'");
      spec.kind = *parsed;
      if (const auto* vlan = optional_scalar(labels, "labcube.vlan_id", path + ".labels")) {
        try {
          spec.vlan_id = std::stoi(*vlan);
        } catch (const std::exception&) {
          throw SchemaError(path + ".labels.labcube.vlan_id", "not an integer");
        }
      }
      const Node& ipam = require(node, "ipam", path);
      const Node& config = require(ipam, "config", path + ".ipam");
      if (!config.is_sequence() || config.items().size() != 1 || !config.items()[0].is_mapping()) {
        throw SchemaError(path + ".ipam.config", "expected one pool");
      }
      const Node& pool = config.items()[0];
      const std::string& subnet = require_scalar(pool, "subnet", path + ".ipam.config");
      auto cidr = Ipv4Cidr::parse(subnet);
      if (!cidr) throw SchemaError(path + ".ipam.config.subnet", "'" + subnet + "' is not a CIDR");
      spec.subnet = *cidr;
      if (const auto* gw = optional_scalar(pool, "gateway", path + ".ipam.config")) {
        spec.gateway = require_address(*gw, path + ".ipam.config.gateway");
      }
      doc.networks.push_back(std::move(spec));
    }
  }
  return doc;
}

}  // namespace labcube
