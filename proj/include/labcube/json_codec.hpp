#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "labcube/monitor.hpp"
#include "labcube/orchestrator.hpp"
#include "labcube/render.hpp"
#include "labcube/report.hpp"
#include "labcube/settings.hpp"
#include "labcube/stack_model.hpp"

namespace labcube::codec {

using nlohmann::json;

// RFC 3339 UTC with milliseconds, e.g. 2025-01-01T00:00:01.000Z.
std::string format_timestamp(Timestamp ts);

json to_json(const ValidationReport& report);
json to_json(const CatalogListing& listing);
json to_json(const StackManifest& manifest);
json to_json(const RenderedConfig& config);
json to_json(const ContainerStatus& status);
json to_json(const StackSession& session);
json to_json(const HealthSnapshot& snapshot);
// {ts, service, line, channel, color}; GAP adds "dropped", END has no line.
json to_json(const TaggedLogEvent& event);
json to_json(const SettingsMap& settings);

// Object of string values. Throws SchemaError.
SettingsMap settings_from_json(const json& object);

// Persisted session record (manifest stored as YAML, plan omitted).
json session_record(const StackSession& session);
StackSession session_from_record(const json& record);

}  // namespace labcube::codec
