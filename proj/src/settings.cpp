#include "labcube/settings.hpp"

#include <algorithm>

#include "labcube/error.hpp"

namespace labcube {

SettingsMap::SettingsMap(std::initializer_list<std::pair<const std::string, std::string>> entries) {
  for (const auto& [k, v] : entries) set(k, v);
}

bool SettingsMap::is_valid_key(std::string_view key) {
  if (key.empty() || key.front() < 'A' || key.front() > 'Z') return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

void SettingsMap::set(std::string key, std::string value) {
  if (!is_valid_key(key)) throw SchemaError(key, "setting keys must match [A-Z][A-Z0-9_]*");
  entries_.insert_or_assign(std::move(key), std::move(value));
}

const std::string* SettingsMap::find(std::string_view key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

EnvFile parse_env_file(std::string_view text) {
  EnvFile file;
  int line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw MalformedLine(line_no, "expected KEY=VALUE");
    std::string key(line.substr(0, eq));
    if (!SettingsMap::is_valid_key(key)) {
      throw MalformedLine(line_no, "invalid key '" + key + "'");
    }
    if (file.values.contains(key)) {
      file.warnings.add("DUPLICATE_KEY", key,
                        "line " + std::to_string(line_no) + " overrides an earlier definition",
                        Severity::Warning);
    }
    file.values.set(std::move(key), std::string(line.substr(eq + 1)));
  }
  return file;
}

std::string format_env_file(const SettingsMap& settings) {
  std::string out;
  for (const auto& [k, v] : settings) out += k + "=" + v + "\n";
  return out;
}

std::string to_string(Provenance provenance) {
  return provenance == Provenance::Global ? "GLOBAL" : "STACK";
}

const std::string* ResolvedSettings::find(std::string_view key) const {
  auto it = effective.find(key);
  return it == effective.end() ? nullptr : &it->second;
}

ResolvedSettings resolve_settings(const SettingsMap& global, const SettingsMap& stack_overrides) {
  ResolvedSettings resolved;
  for (const auto& [k, v] : global) {
    resolved.effective[k] = v;
    resolved.provenance[k] = Provenance::Global;
  }
  for (const auto& [k, v] : stack_overrides) {
    resolved.effective[k] = v;
    resolved.provenance[k] = Provenance::Stack;
  }
  return resolved;
}

RenderResult render_template(std::string_view text, const ResolvedSettings& settings) {
  RenderResult result;
  result.content.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c != '$') {
      result.content.push_back(c);
      ++i;
      continue;
    }
    if (text.substr(i, 3) == "$${") {
      result.content += "${";
      i += 3;
      continue;
    }
    if (i + 1 >= text.size() || text[i + 1] != '{') {
      result.content.push_back(c);
      ++i;
      continue;
    }
    const std::size_t close = text.find('}', i + 2);
    if (close == std::string_view::npos) throw BadVariableSyntax(i, "unterminated '${'");
    std::string_view key = text.substr(i + 2, close - i - 2);
    if (!SettingsMap::is_valid_key(key)) {
      throw BadVariableSyntax(i, "invalid variable name '" + std::string(key) + "'");
    }
    const std::string* value = settings.find(key);
    if (!value) throw UnresolvedVariable(std::string(key), i);
    result.content += *value;
    result.variables_used.emplace(key);
    i = close + 1;
  }
  return result;
}

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

ValidationReport validate_settings(const SettingsMap& settings) {
  ValidationReport report;
  if (const auto* mcc = settings.find("MCC"); mcc && !(mcc->size() == 3 && all_digits(*mcc))) {
    report.add("LENGTH", "MCC", "MCC must be exactly 3 digits, got '" + *mcc + "'");
  }
  if (const auto* mnc = settings.find("MNC");
      mnc && !((mnc->size() == 2 || mnc->size() == 3) && all_digits(*mnc))) {
    report.add("LENGTH", "MNC", "MNC must be 2 or 3 digits, got '" + *mnc + "'");
  }
  for (const auto& [k, v] : settings) {
    if (v.find("${") != std::string::npos) {
      report.add("NESTED_VARIABLE", k, "values may not contain '${'; they are not re-scanned");
    }
  }
  return report;
}

}  // namespace labcube
