#include "labcube/json_codec.hpp"

#include <cstdio>
#include <ctime>

#include "labcube/error.hpp"

namespace labcube::codec {

std::string format_timestamp(Timestamp ts) {
  const std::int64_t ms = to_millis(ts);
  const std::int64_t secs = ms >= 0 ? ms / 1000 : (ms - 999) / 1000;
  const auto millis = static_cast<int>(ms - secs * 1000);
  const std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
  return buf;
}

json to_json(const ValidationReport& report) {
  json findings = json::array();
  for (const auto& f : report.findings()) {
    findings.push_back({{"severity", to_string(f.severity)},
                        {"code", f.code},
                        {"subject", f.subject},
                        {"message", f.message}});
  }
  return findings;
}

json to_json(const CatalogListing& listing) {
  return {{"name", listing.name},
          {"generation", to_string(listing.generation)},
          {"description", listing.description},
          {"service_count", listing.service_count}};
}

json to_json(const StackManifest& manifest) {
  json services = json::array();
  for (const auto& s : manifest.services) {
    json attachments = json::array();
    for (const auto& a : s.attachments) {
      json aj{{"network", a.network}};
      if (a.static_ip) aj["static_ip"] = a.static_ip->to_string();
      if (a.ip_setting_key) aj["ip_key"] = *a.ip_setting_key;
      attachments.push_back(aj);
    }
    json templates = json::array();
    for (const auto& t : s.templates) templates.push_back({{"src", t.source}, {"dst", t.target}});
    json sj{{"name", s.name},
            {"image", s.image},
            {"role", to_string(s.role)},
            {"target_host", s.target_host},
            {"depends_on", s.depends_on},
            {"attachments", attachments},
            {"templates", templates}};
    if (s.command) sj["command"] = *s.command;
    services.push_back(sj);
  }
  return {{"name", manifest.name},
          {"description", manifest.description},
          {"generation", to_string(manifest.generation)},
          {"networks", manifest.networks},
          {"overrides", to_json(manifest.overrides)},
          {"services", services}};
}

json to_json(const RenderedConfig& config) {
  return {{"service", config.service},
          {"template", config.template_path},
          {"target", config.target_path},
          {"path", output_path(config).generic_string()},
          {"content", config.content},
          {"variables", config.variables_used}};
}

json to_json(const ContainerStatus& status) {
  json j{{"service", status.service},
         {"container", status.container},
         {"host", status.host},
         {"state", to_string(status.state)},
         {"exit_code", nullptr},
         {"since", nullptr}};
  if (status.exit_code) j["exit_code"] = *status.exit_code;
  if (status.since) j["since"] = format_timestamp(*status.since);
  return j;
}

json to_json(const StackSession& session) {
  json j{{"id", session.id},
         {"stack", session.stack},
         {"state", to_string(session.state)},
         {"started_at", format_timestamp(session.started_at)},
         {"planned_actions", session.planned},
         {"applied_actions", session.applied},
         {"failure", nullptr}};
  if (session.failure) j["failure"] = *session.failure;
  return j;
}

json to_json(const HealthSnapshot& snapshot) {
  json services = json::array();
  for (const auto& s : snapshot.per_service) {
    json sj = to_json(s.status);
    sj["color"] = to_string(s.color);
    services.push_back(sj);
  }
  json j{{"stack", snapshot.stack.empty() ? json(nullptr) : json(snapshot.stack)},
         {"session", nullptr},
         {"session_state", nullptr},
         {"services", services},
         {"aggregate", to_string(snapshot.aggregate)},
         {"taken_at", format_timestamp(snapshot.taken_at)}};
  if (snapshot.session_id) j["session"] = *snapshot.session_id;
  if (snapshot.session_state) j["session_state"] = to_string(*snapshot.session_state);
  return j;
}

json to_json(const TaggedLogEvent& tagged) {
  const LogEvent& e = tagged.event;
  json j{{"ts", format_timestamp(e.ts)}, {"service", e.service}, {"color", to_string(tagged.color)}};
  switch (e.kind) {
    case LogEventKind::Line:
      j["line"] = e.line;
      j["channel"] = to_string(e.channel);
      break;
    case LogEventKind::Gap: j["dropped"] = e.dropped; break;
    case LogEventKind::End: break;
  }
  return j;
}

json to_json(const SettingsMap& settings) {
  json j = json::object();
  for (const auto& [k, v] : settings) j[k] = v;
  return j;
}

SettingsMap settings_from_json(const json& object) {
  if (!object.is_object()) throw SchemaError("settings", "expected an object of strings");
  SettingsMap out;
  for (const auto& [k, v] : object.items()) {
    if (!v.is_string()) throw SchemaError("settings." + k, "expected a string value");
    out.set(k, v.get<std::string>());
  }
  return out;
}

json session_record(const StackSession& session) {
  json j{{"id", session.id},
         {"stack", session.stack},
         {"state", to_string(session.state)},
         {"started_at", to_millis(session.started_at)},
         {"planned", session.planned},
         {"applied", session.applied},
         {"manifest", serialize_manifest(session.manifest)}};
  if (session.failure) j["failure"] = *session.failure;
  return j;
}

StackSession session_from_record(const json& record) {
  try {
    StackSession s;
    s.id = record.at("id").get<std::string>();
    s.stack = record.at("stack").get<std::string>();
    const std::string state = record.at("state").get<std::string>();
    bool known = false;
    for (auto st : {SessionState::Starting, SessionState::Running, SessionState::Stopping, SessionState::Stopped,
                    SessionState::Failed}) {
      if (to_string(st) == state) {
        s.state = st;
        known = true;
      }
    }
    if (!known) throw SchemaError("session.state", "unknown state '" + state + "'");
    s.started_at = from_millis(record.at("started_at").get<std::int64_t>());
    s.planned = record.at("planned").get<std::size_t>();
    s.applied = record.at("applied").get<std::size_t>();
    s.manifest = parse_manifest(record.at("manifest").get<std::string>());
    s.plan.stack = s.stack;
    if (record.contains("failure")) s.failure = record["failure"].get<std::string>();
    return s;
  } catch (const json::exception& e) {
    throw SchemaError("session", e.what());
  }
}

}  // namespace labcube::codec
