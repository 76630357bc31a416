#include "labcube/render.hpp"

#include <fstream>
#include <sstream>

#include "labcube/error.hpp"

namespace labcube {

namespace {

bool escapes_root(const std::filesystem::path& relative) {
  if (relative.is_absolute()) return true;
  for (const auto& part : relative) {
    if (part == "..") return true;
  }
  return false;
}

}  // namespace

std::vector<RenderedConfig> render_stack(const StackManifest& manifest,
                                         const ResolvedSettings& settings,
                                         const std::filesystem::path& template_root) {
  std::vector<RenderedConfig> out;
  for (const auto& service : manifest.services) {
    for (const auto& binding : service.templates) {
      const std::filesystem::path relative(binding.source);
      if (escapes_root(relative)) {
        throw RenderError(service.name, binding.source, "BAD_TEMPLATE_PATH",
                          "template paths must stay inside the template root");
      }
      const auto path = template_root / relative;
      std::ifstream in(path, std::ios::binary);
      if (!in) throw IoError(path.string(), "template not found for service " + service.name);
      std::ostringstream text;
      text << in.rdbuf();
      try {
        RenderResult rendered = render_template(text.str(), settings);
        out.push_back({service.name, binding.source, binding.target, std::move(rendered.content),
                       std::move(rendered.variables_used)});
      } catch (const Error& e) {
        throw RenderError(service.name, binding.source, e.code(), e.what());
      }
    }
  }
  return out;
}

std::vector<RenderedConfig> configs_for_service(const std::vector<RenderedConfig>& configs,
                                                const std::string& service) {
  std::vector<RenderedConfig> out;
  for (const auto& c : configs) {
    if (c.service == service) out.push_back(c);
  }
  return out;
}

std::filesystem::path output_path(const RenderedConfig& config) {
  std::string target = config.target_path;
  while (!target.empty() && target.front() == '/') target.erase(0, 1);
  return std::filesystem::path(config.service) / target;
}

void write_rendered(const std::vector<RenderedConfig>& configs, const std::filesystem::path& out_dir) {
  for (const auto& c : configs) {
    const auto relative = output_path(c);
    if (escapes_root(relative)) throw IoError(relative.string(), "target escapes the output directory");
    const auto path = out_dir / relative;
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string(), ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << c.content;
    if (!out) throw IoError(path.string(), "write failed");
  }
}

}  // namespace labcube
