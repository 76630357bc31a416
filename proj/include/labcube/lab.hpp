#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "labcube/orchestrator.hpp"
#include "labcube/report.hpp"
#include "labcube/sim_engine.hpp"

namespace labcube {

// File locations and bind address. Defaults derive from a lab directory:
//   <lab>/stacks, <lab>/templates, <lab>/settings/global.env,
//   <lab>/settings/subscribers.env, <lab>/networks.yaml, <lab>/hosts.yaml
// CUBE_CATALOG, CUBE_SETTINGS, CUBE_HOSTS and CUBE_BIND override single
// entries; the template root then follows the catalog (../templates) and the
// subscriber file follows the settings file (same directory).
struct LabConfig {
  std::filesystem::path catalog_dir;
  std::filesystem::path template_root;
  std::filesystem::path settings_file;
  std::filesystem::path subscribers_file;
  std::filesystem::path networks_file;  // built-in catalog when absent
  std::filesystem::path hosts_file;     // built-in registry when absent
  std::string bind = "127.0.0.1:8080";
  std::optional<std::filesystem::path> state_file;  // simulated lab persistence
  std::filesystem::path deploy_root = "/var/lib/labcube/deploy";
  Orchestrator::Options orchestrator;
};

using EnvironmentMap = std::map<std::string, std::string>;

EnvironmentMap process_environment();

LabConfig make_config(const std::filesystem::path& lab_dir, const EnvironmentMap& env);

// "host:port" -> pair. Throws SchemaError.
std::pair<std::string, int> parse_bind(const std::string& bind);

// Loaded lab: orchestrator plus the simulated lab behind any sim:// endpoint.
struct LabContext {
  LabConfig config;
  std::shared_ptr<SimulatedLab> simulated;
  std::unique_ptr<Orchestrator> orchestrator;
  ValidationReport load_warnings;  // env-file duplicates, catalog findings

  // Writes the simulated lab and the sessions to config.state_file.
  void save_state() const;
};

// Reads every configured file. Throws IoError, SyntaxError, SchemaError,
// MalformedLine, IncompleteRecord.
std::unique_ptr<LabContext> load_lab(const LabConfig& config);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace labcube
