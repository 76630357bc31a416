#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labcube/hosts.hpp"
#include "labcube/ipv4.hpp"
#include "labcube/netplan.hpp"
#include "labcube/report.hpp"
#include "labcube/settings.hpp"

namespace labcube {

enum class Generation { G2, G4, G5SA, Emulated };
enum class ServiceRole { CoreNf, Ran, Ims, Db, Util };

std::string to_string(Generation generation);
std::string to_string(ServiceRole role);
std::optional<Generation> parse_generation(std::string_view text);
std::optional<ServiceRole> parse_service_role(std::string_view text);

inline constexpr std::string_view kDefaultTargetHost = "controller";

// At most one of static_ip / ip_setting_key is set; with neither the engine
// picks the address.
struct NetworkAttachment {
  std::string network;
  std::optional<Ipv4Address> static_ip;
  std::optional<std::string> ip_setting_key;

  bool operator==(const NetworkAttachment&) const = default;
};

struct TemplateBinding {
  std::string source;  // relative to the template root
  std::string target;  // path inside the container

  bool operator==(const TemplateBinding&) const = default;
};

struct ServiceSpec {
  std::string name;
  std::string image;
  ServiceRole role = ServiceRole::CoreNf;
  std::vector<NetworkAttachment> attachments;
  std::vector<TemplateBinding> templates;
  std::string target_host{kDefaultTargetHost};
  std::vector<std::string> depends_on;
  std::optional<std::string> command;

  const NetworkAttachment* attachment(std::string_view network) const;
  bool operator==(const ServiceSpec&) const = default;
};

struct StackManifest {
  std::string name;
  std::string description;
  Generation generation = Generation::G5SA;
  std::vector<ServiceSpec> services;
  std::vector<std::string> networks;
  SettingsMap overrides;

  const ServiceSpec* find_service(std::string_view name) const;
  bool operator==(const StackManifest&) const = default;
};

// Manifest document (YAML subset):
//   name, description, generation, networks, overrides, services
// with each service keyed by name and holding
//   image, role, target_host, depends_on, attachments, templates, command.
// Unknown keys are rejected. Throws SyntaxError, SchemaError, DuplicateService.
StackManifest parse_manifest(std::string_view text);
std::string serialize_manifest(const StackManifest& manifest);

// Findings (all errors): NETWORK_NOT_DECLARED, UNKNOWN_NETWORK, UNKNOWN_HOST,
// REMOTE_NON_RAN, UNKNOWN_DEPENDENCY, DEPENDENCY_CYCLE, UNRESOLVED_SETTING,
// INVALID_ADDRESS, DYNAMIC_ADDRESS, ADDRESS_CONFLICT.
ValidationReport validate_manifest(const StackManifest& manifest, const NetworkCatalog& networks,
                                   const HostRegistry& hosts, const ResolvedSettings& settings);

// Service names in dependency order; ties keep manifest order with RAN
// services after everything else that is ready. Throws CycleError.
std::vector<std::string> topological_order(const StackManifest& manifest);

// Swaps each RAN service of a 5G SA stack for a software gNB + UE pair
// running on the controller. Throws SchemaError for other generations.
StackManifest make_emulated_variant(const StackManifest& manifest);

struct CatalogEntry {
  StackManifest manifest;
  std::filesystem::path source;
};

struct StackCatalog {
  std::vector<CatalogEntry> entries;  // sorted by stack name
  ValidationReport findings;          // unreadable or duplicate manifests

  const CatalogEntry* find(std::string_view name) const;
};

// Loads every *.yaml / *.yml file in the directory. Throws IoError when the
// directory cannot be read.
StackCatalog load_catalog(const std::filesystem::path& root);

struct CatalogListing {
  std::string name;
  Generation generation = Generation::G5SA;
  std::string description;
  std::size_t service_count = 0;
};

struct CatalogList {
  std::vector<CatalogListing> entries;
  ValidationReport findings;
};

CatalogList list_catalog(const std::filesystem::path& root);

}  // namespace labcube
