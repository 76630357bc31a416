#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace labcube {

enum class EndpointKind { Simulated, Real };

// Where a host's container engine (or remote channel) can be reached.
// "sim://<host>" selects the in-process simulated engine; "unix:///path",
// "tcp://host:port" and "ssh://[user@]host" address real ones.
struct EngineEndpoint {
  std::string host;
  std::string address;
  EndpointKind kind = EndpointKind::Simulated;

  bool operator==(const EngineEndpoint&) const = default;
};

// Derives the kind from the URI scheme. Throws SchemaError for an empty or
// unsupported address.
EngineEndpoint make_endpoint(std::string host, std::string address);

struct RanHost {
  std::string name;
  EngineEndpoint engine;
  EngineEndpoint channel;

  bool operator==(const RanHost&) const = default;
};

struct HostRegistry {
  std::string controller = "controller";
  EngineEndpoint controller_engine{"controller", "sim://controller", EndpointKind::Simulated};
  std::vector<RanHost> ran_hosts;

  bool is_controller(std::string_view name) const { return name == controller; }
  const RanHost* find_ran_host(std::string_view name) const;
  // Controller or a registered RAN host.
  bool knows(std::string_view name) const;
  std::vector<std::string> host_names() const;
  const EngineEndpoint& engine_endpoint(std::string_view host) const;

  bool operator==(const HostRegistry&) const = default;
};

// Host registry document:
//   controller: controller
//   controller_engine: sim://controller
//   ran_hosts:
//     - name: ran-1
//       engine: sim://ran-1
//       channel: sim://ran-1
HostRegistry parse_host_registry(std::string_view text);

// Controller plus ran-1 and ran-2, all simulated.
HostRegistry default_host_registry();

}  // namespace labcube
