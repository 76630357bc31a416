#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "labcube/settings.hpp"
#include "labcube/stack_model.hpp"

namespace labcube {

struct RenderedConfig {
  std::string service;
  std::string template_path;
  std::string target_path;
  std::string content;
  std::set<std::string> variables_used;

  bool operator==(const RenderedConfig&) const = default;
};

// One config per (service, template) pair in manifest order. Either every
// template renders or nothing is returned; failures carry the service and
// template (RenderError) or the missing path (IoError).
std::vector<RenderedConfig> render_stack(const StackManifest& manifest,
                                         const ResolvedSettings& settings,
                                         const std::filesystem::path& template_root);

std::vector<RenderedConfig> configs_for_service(const std::vector<RenderedConfig>& configs,
                                                const std::string& service);

// Relative location of a rendered file below an output directory:
// <service>/<target path without its leading '/'>.
std::filesystem::path output_path(const RenderedConfig& config);

// Writes every config below `out_dir` (see output_path). Throws IoError.
void write_rendered(const std::vector<RenderedConfig>& configs, const std::filesystem::path& out_dir);

}  // namespace labcube
