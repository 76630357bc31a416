#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labcube/ipv4.hpp"
#include "labcube/report.hpp"
#include "labcube/settings.hpp"

namespace labcube {

struct StackManifest;

enum class NetworkKind { MacvlanTrunk, BridgeWan, Isolated };

std::string to_string(NetworkKind kind);
std::optional<NetworkKind> parse_network_kind(std::string_view text);

struct NetworkSpec {
  std::string name;
  NetworkKind kind = NetworkKind::Isolated;
  Ipv4Cidr subnet;
  std::optional<Ipv4Address> gateway;
  std::optional<int> vlan_id;

  bool operator==(const NetworkSpec&) const = default;
};

struct NetworkCatalog {
  std::vector<NetworkSpec> networks;

  const NetworkSpec* find(std::string_view name) const;
};

// Network catalog document:
//   networks:
//     corenet: {kind, subnet, gateway?, vlan_id?}
// Structural errors throw SyntaxError/SchemaError; semantic problems
// (overlaps, vlan misuse, ...) are left to validate_networks.
NetworkCatalog parse_network_catalog(std::string_view text);
std::string serialize_network_catalog(const NetworkCatalog& catalog);

// corenet (macvlan trunk, vlan 5), extnet (bridged to the WAN), rfnet (isolated).
NetworkCatalog default_network_catalog();

// Findings: DUPLICATE_NAME, OVERLAP, GATEWAY_OUTSIDE_SUBNET, VLAN_MISUSE.
ValidationReport validate_networks(const NetworkCatalog& catalog);

// Locally administered unicast MAC ("02:..") derived from a stable hash of
// service and network.
std::string derive_mac(std::string_view service, std::string_view network);

struct AddressAssignment {
  std::string service;
  std::string network;
  Ipv4Address address;
  std::string mac;

  bool operator==(const AddressAssignment&) const = default;
};

struct AddressPlan {
  std::vector<AddressAssignment> assignments;

  std::vector<AddressAssignment> for_service(std::string_view service) const;
  const AddressAssignment* find(std::string_view service, std::string_view network) const;
};

// Addresses come from static_ip or from the setting named by ip_setting_key;
// attachments with neither are left to the engine. Throws
// UnresolvedAddressKey / UnparsableAddress.
AddressPlan build_address_plan(const StackManifest& manifest, const ResolvedSettings& settings);

enum class ConflictKind { Duplicate, OutOfSubnet, GatewayCollision, UnknownNetwork };

std::string to_string(ConflictKind kind);

struct Conflict {
  ConflictKind kind = ConflictKind::Duplicate;
  std::string network;
  Ipv4Address address;
  // Every service involved, sorted.
  std::vector<std::string> services;

  auto operator<=>(const Conflict&) const = default;
};

// Sorted and free of repeats. Empty means every (network, address) pair is
// distinct and every address is a usable host address of its subnet other
// than the gateway.
std::vector<Conflict> check_address_plan(const AddressPlan& plan, const NetworkCatalog& catalog);

}  // namespace labcube
