#include "labcube/api.hpp"

#include <atomic>
#include <chrono>
#include <thread>

#include "httplib.h"
#include "labcube/error.hpp"
#include "labcube/json_codec.hpp"
#include "labcube/monitor.hpp"

namespace labcube::api {

using nlohmann::json;

namespace {

class BadRequest : public Error {
 public:
  explicit BadRequest(const std::string& what) : Error("BAD_REQUEST", what) {}
};

constexpr int kAccepted = 202;

std::vector<std::string> split_services(const httplib::Request& req) {
  std::vector<std::string> out;
  const auto count = req.get_param_value_count("service");
  for (std::size_t i = 0; i < count; ++i) {
    const std::string value = req.get_param_value("service", i);
    std::size_t start = 0;
    while (start <= value.size()) {
      const auto comma = value.find(',', start);
      const auto end = comma == std::string::npos ? value.size() : comma;
      if (end > start) out.push_back(value.substr(start, end - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

bool flag_param(const httplib::Request& req, const std::string& name) {
  if (!req.has_param(name)) return false;
  const std::string v = req.get_param_value(name);
  if (v.empty() || v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw BadRequest("query parameter '" + name + "' must be true or false");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json body = json::parse(req.body);
    if (!body.is_object()) throw BadRequest("request body must be a JSON object");
    return body;
  } catch (const json::parse_error& e) {
    throw BadRequest(std::string("malformed JSON body: ") + e.what());
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::exception& e) {
  const ApiError err = to_api_error(e);
  send_json(res, err.http_status, error_body(err));
}

std::string sse_for(const TaggedLogEvent& e) {
  switch (e.event.kind) {
    case LogEventKind::Line: return sse_event("log", codec::to_json(e));
    case LogEventKind::Gap: return sse_event("gap", codec::to_json(e));
    case LogEventKind::End: return sse_event("end", codec::to_json(e));
  }
  return {};
}

}  // namespace

const std::vector<ErrorCode>& closed_error_set() {
  static const std::vector<ErrorCode> set{
      {"BAD_REQUEST", 400},          {"UNKNOWN_STACK", 404},     {"UNKNOWN_SERVICE", 404},
      {"STACK_ALREADY_ACTIVE", 409}, {"NO_ACTIVE_SESSION", 409}, {"VALIDATION_FAILED", 422},
      {"SETTINGS_LOCKED", 423},      {"ENGINE_FAILURE", 502},
  };
  return set;
}

ApiError to_api_error(const std::exception& error) {
  auto make = [&](std::string code, int status) {
    return ApiError{std::move(code), error.what(), status, std::nullopt};
  };
  if (const auto* v = dynamic_cast<const ValidationFailed*>(&error)) {
    ApiError e = make("VALIDATION_FAILED", 422);
    e.report = v->report();
    return e;
  }
  if (dynamic_cast<const BadRequest*>(&error) || dynamic_cast<const SchemaError*>(&error)) {
    return make("BAD_REQUEST", 400);
  }
  if (dynamic_cast<const UnknownStack*>(&error)) return make("UNKNOWN_STACK", 404);
  if (dynamic_cast<const UnknownService*>(&error)) return make("UNKNOWN_SERVICE", 404);
  if (dynamic_cast<const StackAlreadyActive*>(&error)) return make("STACK_ALREADY_ACTIVE", 409);
  if (dynamic_cast<const NoActiveSession*>(&error)) return make("NO_ACTIVE_SESSION", 409);
  if (dynamic_cast<const SettingsLocked*>(&error)) return make("SETTINGS_LOCKED", 423);
  if (dynamic_cast<const EngineError*>(&error)) return make("ENGINE_FAILURE", 502);
  return make("INTERNAL_ERROR", 500);
}

json error_body(const ApiError& error) {
  json body{{"error", {{"code", error.code}, {"message", error.message}, {"http_status", error.http_status}}}};
  if (error.report) body["report"] = codec::to_json(*error.report);
  return body;
}

std::string sse_event(std::string_view event, const json& data) {
  std::string out = "event: ";
  out += event;
  out += "\ndata: ";
  out += data.dump();
  out += "\n\n";
  return out;
}

struct ApiServer::Impl {
  LabContext& lab;
  httplib::Server server;
  std::jthread thread;
  std::shared_ptr<std::atomic<bool>> stopping = std::make_shared<std::atomic<bool>>(false);

  explicit Impl(LabContext& l) : lab(l) { routes(); }

  Orchestrator& orch() { return *lab.orchestrator; }

  // Wraps a handler so every exception becomes an error body.
  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const std::exception& e) {
        send_error(res, e);
      }
    };
  }

  void routes() {
    server.Get("/api/stacks", guarded([this](const httplib::Request&, httplib::Response& res) {
      json stacks = json::array();
      for (const auto& entry : orch().catalog().entries) {
        const auto& m = entry.manifest;
        stacks.push_back(codec::to_json(CatalogListing{m.name, m.generation, m.description, m.services.size()}));
      }
      send_json(res, 200, {{"stacks", stacks}, {"findings", codec::to_json(orch().catalog().findings)}});
    }));

    server.Get(R"(/api/stacks/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string name = req.matches[1];
      const bool emulated = flag_param(req, "emulated");
      const auto* entry = orch().catalog().find(name);
      if (!entry) throw UnknownStack(name);
      const StackManifest manifest = emulated ? make_emulated_variant(entry->manifest) : entry->manifest;
      send_json(res, 200,
                {{"manifest", codec::to_json(manifest)}, {"report", codec::to_json(orch().validate(name, emulated))}});
    }));

    server.Get(R"(/api/stacks/([^/]+)/render)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string name = req.matches[1];
                 const PreparedStack prepared = orch().prepare(name, flag_param(req, "emulated"));
                 json configs = json::array();
                 for (const auto& c : prepared.rendered) configs.push_back(codec::to_json(c));
                 send_json(res, 200, {{"stack", name}, {"configs", configs}});
               }));

    server.Post(R"(/api/stacks/([^/]+)/start)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string name = req.matches[1];
                  const json body = parse_body(req);
                  StartPolicy policy = StartPolicy::RejectIfActive;
                  if (body.contains("policy")) {
                    if (!body["policy"].is_string()) throw BadRequest("'policy' must be a string");
                    const auto parsed = parse_start_policy(body["policy"].get<std::string>());
                    if (!parsed) throw BadRequest("unknown policy '" + body["policy"].get<std::string>() + "'");
                    policy = *parsed;
                  }
                  bool emulated = false;
                  if (body.contains("emulated")) {
                    if (!body["emulated"].is_boolean()) throw BadRequest("'emulated' must be a boolean");
                    emulated = body["emulated"].get<bool>();
                  }
                  const auto ticket = orch().submit_start(name, policy, emulated);
                  send_json(res, kAccepted, {{"session", codec::to_json(ticket.admitted)}});
                }));

    server.Post(R"(/api/stacks/([^/]+)/stop)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string name = req.matches[1];
                  if (!orch().catalog().find(name)) throw UnknownStack(name);
                  const auto current = orch().current_session();
                  if (!current || current->stack != name || current->state == SessionState::Stopped) {
                    throw NoActiveSession("stack '" + name + "' has no session to stop");
                  }
                  const auto ticket = orch().submit_stop();
                  send_json(res, kAccepted, {{"session", codec::to_json(ticket.admitted)}});
                }));

    server.Get("/api/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      json sessions = json::array();
      for (const auto& s : orch().sessions()) sessions.push_back(codec::to_json(s));
      send_json(res, 200, {{"sessions", sessions}});
    }));

    server.Get("/api/status", guarded([this](const httplib::Request&, httplib::Response& res) {
      const auto snapshot = poll_snapshot(orch().current_session(), orch().environment().hosts, orch().pool());
      send_json(res, 200, codec::to_json(snapshot));
    }));

    server.Get("/api/logs", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto filter = split_services(req);
      const bool follow = flag_param(req, "follow");
      const auto session = orch().current_session();
      select_services(session, filter);  // reports NO_ACTIVE_SESSION / UNKNOWN_SERVICE before streaming
      res.set_header("Cache-Control", "no-cache");
      if (!follow) {
        std::string body;
        for (const auto& e : multiplex_logs(session, orch().environment().hosts, orch().pool(), filter)) {
          body += sse_for(e);
        }
        res.status = 200;
        res.set_content(body, "text/event-stream");
        return;
      }
      auto sub = std::make_shared<LogSubscription>(session, orch().environment().hosts, orch().pool(), filter);
      auto stop_flag = stopping;
      res.set_chunked_content_provider(
          "text/event-stream",
          [sub, stop_flag](std::size_t, httplib::DataSink& sink) {
            while (!stop_flag->load()) {
              if (!sink.is_writable()) return false;
              auto e = sub->next(std::chrono::milliseconds(200));
              if (e) {
                const std::string chunk = sse_for(*e);
                return sink.write(chunk.data(), chunk.size());
              }
              if (sub->finished()) {
                sink.done();
                return true;
              }
            }
            return false;
          },
          [sub](bool) { sub->close(); });
    }));

    server.Get("/api/settings", guarded([this](const httplib::Request&, httplib::Response& res) {
      const auto current = orch().current_session();
      const bool locked = current && is_active(current->state);
      send_json(res, 200, {{"settings", codec::to_json(orch().settings())}, {"locked", locked}});
    }));

    server.Put("/api/settings", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      if (!body.contains("settings")) throw BadRequest("body must contain 'settings'");
      orch().put_settings(codec::settings_from_json(body["settings"]));
      send_json(res, 200, {{"settings", codec::to_json(orch().settings())}, {"locked", false}});
    }));
  }
};

ApiServer::ApiServer(LabContext& lab) : impl_(std::make_unique<Impl>(lab)) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw IoError(host + ":" + std::to_string(port), "cannot bind");
  impl_->thread = std::jthread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ApiServer::serve(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port)) throw IoError(host + ":" + std::to_string(port), "cannot bind");
  impl_->server.listen_after_bind();
}

void ApiServer::stop() {
  if (!impl_) return;
  impl_->stopping->store(true);
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace labcube::api
