#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labcube/engine.hpp"

namespace labcube {

// Minimal compose document run on a RAN host:
//
//   name: <stack>
//   services:
//     <service>:
//       container_name: <stack>_<service>
//       image: <image>
//       command: <command>              (optional)
//       labels: {labcube.stack, labcube.service, labcube.role}
//       volumes: [./<file>:<target>:ro]
//       networks:
//         <network>: {ipv4_address, mac_address}
//   networks:
//     <network>:
//       driver: macvlan | bridge
//       internal: "true"                (ISOLATED only)
//       ipam: {config: [{subnet, gateway}]}
//       labels: {labcube.stack, labcube.kind, labcube.vlan_id}
struct ComposeNetworkRef {
  std::string network;
  std::optional<Ipv4Address> ip;
  std::optional<std::string> mac;

  bool operator==(const ComposeNetworkRef&) const = default;
};

struct ComposeService {
  ContainerDescriptor container;
  std::vector<ComposeNetworkRef> networks;

  bool operator==(const ComposeService&) const = default;
};

struct ComposeDocument {
  std::string stack;
  std::vector<ComposeService> services;
  std::vector<NetworkSpec> networks;

  bool operator==(const ComposeDocument&) const = default;
};

std::string emit_compose(const ComposeDocument& doc);
// Throws SyntaxError or SchemaError.
ComposeDocument parse_compose(std::string_view text);

}  // namespace labcube
