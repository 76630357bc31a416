#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "httplib.h"
#include "labcube/api.hpp"
#include "labcube/error.hpp"
#include "labcube/json_codec.hpp"
#include "rig.hpp"

using namespace labcube;
using nlohmann::json;

namespace {

const std::string kStack = "srsran-open5gs-5gsa";

class Api : public ::testing::Test {
 protected:
  void SetUp() override {
    lab_dir_ = rig::copy_lab(dir_);
    lab_ = load_lab(make_config(lab_dir_, {}));
    server_ = std::make_unique<api::ApiServer>(*lab_);
    port_ = server_->start("127.0.0.1", 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(10, 0);
  }
  void TearDown() override { server_->stop(); }

  json get_json(const std::string& path, int status = 200) {
    auto res = client_->Get(path);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, status) << path << ": " << res->body;
    return json::parse(res->body);
  }

  json post(const std::string& path, const std::string& body, int status) {
    auto res = client_->Post(path, body, "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, status) << path << ": " << res->body;
    return json::parse(res->body);
  }

  json wait_for(const std::string& id, const std::string& state) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    while (std::chrono::steady_clock::now() < deadline) {
      const json body = get_json("/api/sessions");
      for (const auto& s : body["sessions"]) {
        if (s["id"] == id && s["state"] == state) return s;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    ADD_FAILURE() << id << " never reached " << state;
    return {};
  }

  std::string start_running(const std::string& stack = kStack) {
    const json body = post("/api/stacks/" + stack + "/start", "{}", 202);
    const std::string id = body["session"]["id"];
    wait_for(id, "RUNNING");
    return id;
  }

  void expect_error(const httplib::Result& res, int status, const std::string& code) {
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, status) << res->body;
    const json body = json::parse(res->body);
    EXPECT_EQ(body["error"]["code"], code);
    EXPECT_EQ(body["error"]["http_status"], status);
    EXPECT_FALSE(body["error"]["message"].get<std::string>().empty());
  }

  rig::TempDir dir_;
  std::filesystem::path lab_dir_;
  std::unique_ptr<LabContext> lab_;
  std::unique_ptr<api::ApiServer> server_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

// Splits an SSE body into (event, data) pairs.
std::vector<std::pair<std::string, json>> parse_sse(const std::string& body) {
  std::vector<std::pair<std::string, json>> out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto end = body.find("\n\n", pos);
    if (end == std::string::npos) break;
    const std::string block = body.substr(pos, end - pos);
    pos = end + 2;
    const auto nl = block.find('\n');
    EXPECT_EQ(block.rfind("event: ", 0), 0u) << block;
    EXPECT_EQ(block.compare(nl + 1, 6, "data: "), 0) << block;
    out.emplace_back(block.substr(7, nl - 7), json::parse(block.substr(nl + 7)));
  }
  EXPECT_EQ(pos, body.size());
  return out;
}

}  // namespace

TEST(ApiErrors, MappingCoversTheClosedSet) {
  const auto& set = api::closed_error_set();
  ASSERT_EQ(set.size(), 8u);
  auto code_of = [](const std::exception& e) { return api::to_api_error(e); };
  EXPECT_EQ(code_of(SchemaError("f", "bad")).code, "BAD_REQUEST");
  EXPECT_EQ(code_of(UnknownStack("x")).http_status, 404);
  EXPECT_EQ(code_of(UnknownService("x")).code, "UNKNOWN_SERVICE");
  EXPECT_EQ(code_of(StackAlreadyActive("x")).http_status, 409);
  EXPECT_EQ(code_of(NoActiveSession("x")).code, "NO_ACTIVE_SESSION");
  EXPECT_EQ(code_of(SettingsLocked("x")).http_status, 423);
  EXPECT_EQ(code_of(EngineError(EngineError::Kind::Unreachable, "h", "down")).code, "ENGINE_FAILURE");
  EXPECT_EQ(code_of(EngineError(EngineError::Kind::Unreachable, "h", "down")).http_status, 502);
  EXPECT_EQ(code_of(std::runtime_error("boom")).code, "INTERNAL_ERROR");
  EXPECT_EQ(code_of(std::runtime_error("boom")).http_status, 500);

  ValidationReport report;
  report.add("UNKNOWN_HOST", "gnb", "nope");
  const auto vf = code_of(ValidationFailed(report));
  EXPECT_EQ(vf.code, "VALIDATION_FAILED");
  EXPECT_EQ(vf.http_status, 422);
  const json body = api::error_body(vf);
  EXPECT_EQ(body["report"][0]["code"], "UNKNOWN_HOST");
  EXPECT_FALSE(api::error_body(code_of(UnknownStack("x"))).contains("report"));
  for (const auto& e : set) EXPECT_NE(e.code, "INTERNAL_ERROR");
}

TEST(ApiErrors, SseEventFormat) {
  EXPECT_EQ(api::sse_event("log", json{{"a", 1}}), "event: log\ndata: {\"a\":1}\n\n");
}

TEST_F(Api, ListsStacksAndDescribesOne) {
  const json list = get_json("/api/stacks");
  ASSERT_EQ(list["stacks"].size(), 8u);
  EXPECT_TRUE(list["findings"].is_array());
  bool found = false;
  for (const auto& s : list["stacks"]) {
    EXPECT_TRUE(s.contains("generation"));
    EXPECT_GT(s["service_count"].get<int>(), 0);
    found = found || s["name"] == kStack;
  }
  EXPECT_TRUE(found);

  const json one = get_json("/api/stacks/" + kStack);
  EXPECT_EQ(one["manifest"]["name"], kStack);
  EXPECT_TRUE(one["report"].is_array());
  const json emulated = get_json("/api/stacks/" + kStack + "?emulated=true");
  EXPECT_NE(emulated["manifest"], one["manifest"]);
  expect_error(client_->Get("/api/stacks/" + kStack + "?emulated=maybe"), 400, "BAD_REQUEST");
  expect_error(client_->Get("/api/stacks/nope"), 404, "UNKNOWN_STACK");
}

TEST_F(Api, RenderMatchesTheOrchestrator) {
  const json body = get_json("/api/stacks/" + kStack + "/render");
  EXPECT_EQ(body["stack"], kStack);
  const auto prepared = lab_->orchestrator->prepare(kStack, false);
  ASSERT_EQ(body["configs"].size(), prepared.rendered.size());
  for (std::size_t i = 0; i < prepared.rendered.size(); ++i) {
    EXPECT_EQ(body["configs"][i], codec::to_json(prepared.rendered[i]));
  }
  expect_error(client_->Get("/api/stacks/nope/render"), 404, "UNKNOWN_STACK");
}

TEST_F(Api, StartStopAndStatus) {
  const json idle = get_json("/api/status");
  EXPECT_EQ(idle["aggregate"], "GRAY");
  EXPECT_TRUE(idle["services"].empty());

  const std::string id = start_running();
  const json status = get_json("/api/status");
  EXPECT_EQ(status["stack"], kStack);
  EXPECT_EQ(status["aggregate"], "GREEN");
  EXPECT_EQ(status["services"].size(), 8u);

  expect_error(client_->Post("/api/stacks/osmocom-2g/stop", "", "application/json"), 409, "NO_ACTIVE_SESSION");
  const json stop = post("/api/stacks/" + kStack + "/stop", "", 202);
  EXPECT_EQ(stop["session"]["id"], id);
  wait_for(id, "STOPPED");
  EXPECT_EQ(get_json("/api/status")["aggregate"], "GRAY");
  for (const auto& host : {"controller", "ran-1"}) {
    EXPECT_TRUE(lab_->simulated->engine(host)->query_containers(kStack).empty()) << host;
  }
}

TEST_F(Api, StartBodyIsChecked) {
  expect_error(client_->Post("/api/stacks/" + kStack + "/start", R"({"policy":"SOMETIMES"})", "application/json"), 400,
               "BAD_REQUEST");
  expect_error(client_->Post("/api/stacks/" + kStack + "/start", R"({"policy":1})", "application/json"), 400,
               "BAD_REQUEST");
  expect_error(client_->Post("/api/stacks/" + kStack + "/start", R"({"emulated":"yes"})", "application/json"), 400,
               "BAD_REQUEST");
  expect_error(client_->Post("/api/stacks/" + kStack + "/start", "[1]", "application/json"), 400, "BAD_REQUEST");
  expect_error(client_->Post("/api/stacks/nope/start", "{}", "application/json"), 404, "UNKNOWN_STACK");
}

TEST_F(Api, ReplacePolicyAndRejection) {
  const std::string first = start_running();
  expect_error(client_->Post("/api/stacks/osmocom-2g/start", "{}", "application/json"), 409, "STACK_ALREADY_ACTIVE");
  const json body = post("/api/stacks/osmocom-2g/start", R"({"policy":"REPLACE_ACTIVE"})", 202);
  const std::string second = body["session"]["id"];
  EXPECT_NE(first, second);
  wait_for(second, "RUNNING");
  wait_for(first, "STOPPED");
}

TEST_F(Api, EmulatedStart) {
  const json body = post("/api/stacks/" + kStack + "/start", R"({"emulated":true})", 202);
  wait_for(body["session"]["id"], "RUNNING");
  EXPECT_TRUE(lab_->simulated->engine("ran-1")->query_containers(kStack).empty());
}

TEST_F(Api, LogsAsServerSentEvents) {
  expect_error(client_->Get("/api/logs"), 409, "NO_ACTIVE_SESSION");
  start_running();
  lab_->simulated->script_logs("controller", container_name(kStack, "amf"), {"ue attached"});
  lab_->simulated->script_logs("ran-1", container_name(kStack, "gnb"), {"cell up"});

  auto res = client_->Get("/api/logs?service=amf,gnb");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "text/event-stream");
  const auto events = parse_sse(res->body);
  ASSERT_FALSE(events.empty());
  std::set<std::string> lines;
  for (const auto& [name, data] : events) {
    EXPECT_EQ(name, "log");
    EXPECT_TRUE(data["service"] == "amf" || data["service"] == "gnb");
    lines.insert(data["line"].get<std::string>());
  }
  EXPECT_TRUE(lines.count("ue attached"));
  EXPECT_TRUE(lines.count("cell up"));

  auto repeated = client_->Get("/api/logs?service=amf&service=gnb");
  ASSERT_TRUE(repeated);
  EXPECT_EQ(repeated->body, res->body);
  expect_error(client_->Get("/api/logs?service=nope"), 404, "UNKNOWN_SERVICE");
  expect_error(client_->Get("/api/logs?follow=sometimes"), 400, "BAD_REQUEST");
}

TEST_F(Api, FollowedLogsEndPerService) {
  start_running();
  const std::string amf = container_name(kStack, "amf");
  lab_->simulated->script_logs("controller", amf, {"a1"});
  std::thread stopper([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    lab_->simulated->set_exit("controller", amf, 0);
    lab_->simulated->set_exit("controller", container_name(kStack, "smf"), 0);
  });
  auto res = client_->Get("/api/logs?service=amf,smf&follow=true");
  stopper.join();
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto events = parse_sse(res->body);
  std::map<std::string, int> ends;
  bool saw_line = false;
  for (const auto& [name, data] : events) {
    if (name == "end") {
      ++ends[data["service"]];
      EXPECT_FALSE(data.contains("line"));
    } else {
      EXPECT_EQ(name, "log");
      saw_line = saw_line || data["line"] == "a1";
    }
  }
  EXPECT_TRUE(saw_line);
  EXPECT_EQ(ends, (std::map<std::string, int>{{"amf", 1}, {"smf", 1}}));
  EXPECT_EQ(events.back().first, "end");
}

TEST_F(Api, SettingsReadWriteAndLock) {
  const json got = get_json("/api/settings");
  EXPECT_EQ(got["locked"], false);
  EXPECT_EQ(got["settings"], codec::to_json(lab_->orchestrator->settings()));

  json updated = got["settings"];
  updated["TAC"] = "4242";
  auto res = client_->Put("/api/settings", json{{"settings", updated}}.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(json::parse(res->body)["settings"]["TAC"], "4242");
  EXPECT_EQ(read_file(lab_dir_ / "settings" / "global.env"), format_env_file(codec::settings_from_json(updated)));

  json bad = updated;
  bad["MCC"] = "1";
  const auto vf = client_->Put("/api/settings", json{{"settings", bad}}.dump(), "application/json");
  expect_error(vf, 422, "VALIDATION_FAILED");
  EXPECT_TRUE(json::parse(vf->body).contains("report"));
  expect_error(client_->Put("/api/settings", "{}", "application/json"), 400, "BAD_REQUEST");
  expect_error(client_->Put("/api/settings", R"({"settings":{"MCC":1}})", "application/json"), 400, "BAD_REQUEST");

  start_running();
  EXPECT_EQ(get_json("/api/settings")["locked"], true);
  expect_error(client_->Put("/api/settings", json{{"settings", updated}}.dump(), "application/json"), 423,
               "SETTINGS_LOCKED");
}

TEST_F(Api, EngineFailureIsBadGateway) {
  start_running();
  lab_->simulated->inject_failure({"controller", "StopContainer", container_name(kStack, "amf"), false, 1});
  expect_error(client_->Post("/api/stacks/osmocom-2g/start", R"({"policy":"REPLACE_ACTIVE"})", "application/json"),
               502, "ENGINE_FAILURE");
  const json sessions = get_json("/api/sessions");
  bool failed = false;
  for (const auto& s : sessions["sessions"]) failed = failed || s["state"] == "FAILED";
  EXPECT_TRUE(failed);
}
