#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "labcube/report.hpp"

namespace labcube {

// KEY=VALUE settings with keys restricted to [A-Z][A-Z0-9_]*, ordered by key.
class SettingsMap {
 public:
  using Storage = std::map<std::string, std::string, std::less<>>;

  SettingsMap() = default;
  SettingsMap(std::initializer_list<std::pair<const std::string, std::string>> entries);

  static bool is_valid_key(std::string_view key);

  // Throws SchemaError for an invalid key.
  void set(std::string key, std::string value);
  bool contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }
  const std::string* find(std::string_view key) const;

  const Storage& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool operator==(const SettingsMap&) const = default;

 private:
  Storage entries_;
};

struct EnvFile {
  SettingsMap values;
  // DUPLICATE_KEY warnings, one per shadowed occurrence.
  ValidationReport warnings;
};

// Blank lines and lines whose first non-blank character is '#' are skipped.
// The value is everything after the first '=', untrimmed. Throws MalformedLine.
EnvFile parse_env_file(std::string_view text);

// Canonical env text: one KEY=VALUE line per entry in key order.
std::string format_env_file(const SettingsMap& settings);

enum class Provenance { Global, Stack };

std::string to_string(Provenance provenance);

struct ResolvedSettings {
  std::map<std::string, std::string, std::less<>> effective;
  std::map<std::string, Provenance, std::less<>> provenance;

  const std::string* find(std::string_view key) const;
  bool operator==(const ResolvedSettings&) const = default;
};

// Stack overrides shadow global entries with the same key.
ResolvedSettings resolve_settings(const SettingsMap& global, const SettingsMap& stack_overrides);

struct RenderResult {
  std::string content;
  std::set<std::string> variables_used;
};

// Replaces every ${KEY} by its effective value. "$${" is written as a
// literal "${". Values are not re-scanned. Throws UnresolvedVariable or
// BadVariableSyntax.
RenderResult render_template(std::string_view template_text, const ResolvedSettings& settings);

// Checks the lab-wide identity keys (MCC, MNC) when present.
ValidationReport validate_settings(const SettingsMap& settings);

}  // namespace labcube
