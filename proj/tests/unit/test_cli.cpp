#include <gtest/gtest.h>

#include <sstream>

#include "labcube/cli.hpp"
#include "labcube/json_codec.hpp"
#include "labcube/subscribers.hpp"
#include "rig.hpp"

using namespace labcube;
using nlohmann::json;

namespace {

const std::string kStack = "srsran-open5gs-5gsa";

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    lab_dir_ = rig::copy_lab(dir_);
    state_ = dir_.path() / "state.json";
  }

  // Runs against the private lab copy with persisted simulated state.
  CliRun run(std::vector<std::string> args, const EnvironmentMap& env = {}) {
    args.insert(args.begin(), {"--lab", lab_dir_.string(), "--state", state_.string()});
    return run_raw(args, env);
  }

  static CliRun run_raw(const std::vector<std::string>& args, const EnvironmentMap& env = {}) {
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err, env);
    r.out = out.str();
    r.err = err.str();
    return r;
  }

  rig::TempDir dir_;
  std::filesystem::path lab_dir_;
  std::filesystem::path state_;
};

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
  const auto help = run_raw({"--help"});
  EXPECT_EQ(help.code, kExitOk);
  EXPECT_NE(help.out.find("render"), std::string::npos);
  for (const std::vector<std::string>& bad :
       {std::vector<std::string>{}, {"frobnicate"}, {"validate"}, {"status", "--interval", "0"}, {"list", "--nope"}}) {
    const auto r = run_raw(bad);
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_EQ(r.err.rfind("usage error: ", 0), 0u) << r.err;
  }
}

TEST_F(Cli, ListShowsEveryStack) {
  const auto r = run({"list"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find(kStack), std::string::npos);
  const auto j = run({"--json", "list"});
  ASSERT_EQ(j.code, kExitOk);
  const json body = json::parse(j.out);
  EXPECT_EQ(body["stacks"].size(), 8u);
  EXPECT_TRUE(body["findings"].is_array());
}

TEST_F(Cli, ValidateExitCodes) {
  const auto ok = run({"validate", kStack});
  EXPECT_EQ(ok.code, kExitOk) << ok.err;
  EXPECT_EQ(ok.out, "no findings\n");
  rig::write(lab_dir_ / "stacks" / "broken.yaml",
             "name: broken\ngeneration: G5SA\nnetworks: [corenet]\nservices:\n  amf:\n    image: x:1\n    role: CORE_NF\n"
             "    attachments:\n      - network: corenet\n        ip_key: NOT_DEFINED_ANYWHERE\n");
  const auto bad = run({"validate", "broken"});
  EXPECT_EQ(bad.code, kExitFindings);
  EXPECT_NE(bad.out.find("error "), std::string::npos) << bad.out;
  const auto j = run({"--json", "validate", "broken"});
  EXPECT_EQ(j.code, kExitFindings);
  EXPECT_FALSE(json::parse(j.out)["report"].empty());
  const auto unknown = run({"validate", "nope"});
  EXPECT_EQ(unknown.code, kExitRuntime);
  EXPECT_EQ(unknown.err.rfind("error: UNKNOWN_STACK: ", 0), 0u) << unknown.err;
}

TEST_F(Cli, RenderToDirectoryMatchesTheLibrary) {
  const auto out_dir = dir_.path() / "rendered";
  const auto r = run({"render", kStack, "--out", out_dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto lab = load_lab(make_config(lab_dir_, {}));
  const auto prepared = lab->orchestrator->prepare(kStack, false);
  const auto j = run({"--json", "render", kStack});
  ASSERT_EQ(j.code, kExitOk);
  const json configs = json::parse(j.out)["configs"];
  ASSERT_EQ(configs.size(), prepared.rendered.size());
  std::size_t lines = 0;
  for (std::size_t i = 0; i < prepared.rendered.size(); ++i) {
    EXPECT_EQ(configs[i], codec::to_json(prepared.rendered[i]));
    const std::string path = configs[i]["path"];
    EXPECT_EQ(read_file(out_dir / path), prepared.rendered[i].content) << path;
    ++lines;
  }
  EXPECT_EQ(static_cast<std::size_t>(std::count(r.out.begin(), r.out.end(), '\n')), lines);

  const auto stdout_render = run({"render", kStack});
  ASSERT_EQ(stdout_render.code, kExitOk);
  EXPECT_EQ(stdout_render.out.rfind("# ", 0), 0u);
  EXPECT_NE(stdout_render.out.find(prepared.rendered[0].content), std::string::npos);
}

TEST_F(Cli, StartStatusStopAcrossInvocations) {
  const auto start = run({"start", kStack});
  ASSERT_EQ(start.code, kExitOk) << start.err;
  EXPECT_NE(start.out.find("RUNNING"), std::string::npos) << start.out;

  const auto status = run({"--json", "status"});
  ASSERT_EQ(status.code, kExitOk);
  const json snap = json::parse(status.out);
  EXPECT_EQ(snap["stack"], kStack);
  EXPECT_EQ(snap["aggregate"], "GREEN");
  EXPECT_NE(run({"status"}).out.find("gnb"), std::string::npos);

  const auto again = run({"start", "osmocom-2g"});
  EXPECT_EQ(again.code, kExitRuntime);
  EXPECT_NE(again.err.find("STACK_ALREADY_ACTIVE"), std::string::npos);
  const auto replaced = run({"--json", "start", "osmocom-2g", "--replace"});
  ASSERT_EQ(replaced.code, kExitOk) << replaced.err;
  EXPECT_EQ(json::parse(replaced.out)["session"]["stack"], "osmocom-2g");

  const auto stop = run({"--json", "stop"});
  ASSERT_EQ(stop.code, kExitOk) << stop.err;
  EXPECT_EQ(json::parse(stop.out)["session"]["state"], "STOPPED");
  const json lab_state = json::parse(read_file(state_));
  EXPECT_FALSE(lab_state["lab"]["log"].empty());
  EXPECT_EQ(json::parse(run({"--json", "status"}).out)["aggregate"], "GRAY");
}

TEST_F(Cli, StateFileFromEnvironment) {
  const EnvironmentMap env{{"CUBE_LAB", lab_dir_.string()}, {"CUBE_STATE", state_.string()}};
  ASSERT_EQ(run_raw({"start", kStack}, env).code, kExitOk);
  EXPECT_TRUE(std::filesystem::exists(state_));
  EXPECT_EQ(run_raw({"stop"}, env).code, kExitOk);
  const auto second = run_raw({"--json", "stop"}, env);
  EXPECT_EQ(second.code, kExitOk);
  EXPECT_EQ(json::parse(second.out)["session"]["state"], "STOPPED");

  const EnvironmentMap fresh{{"CUBE_LAB", lab_dir_.string()}, {"CUBE_STATE", (dir_.path() / "fresh.json").string()}};
  const auto none = run_raw({"--json", "stop"}, fresh);
  EXPECT_EQ(none.code, kExitRuntime);
  const json body = json::parse(none.out);
  EXPECT_EQ(body["error"]["code"], "NO_ACTIVE_SESSION");
  EXPECT_EQ(body["error"]["http_status"], 409);
}

TEST_F(Cli, Logs) {
  EXPECT_EQ(run({"logs"}).code, kExitRuntime);
  ASSERT_EQ(run({"start", kStack}).code, kExitOk);
  const auto all = run({"logs", "amf"});
  ASSERT_EQ(all.code, kExitOk) << all.err;
  EXPECT_NE(all.out.find(" amf ["), std::string::npos) << all.out;
  EXPECT_EQ(all.out.find(" smf ["), std::string::npos);
  const auto unknown = run({"logs", "nope"});
  EXPECT_EQ(unknown.code, kExitRuntime);
  EXPECT_NE(unknown.err.find("UNKNOWN_SERVICE"), std::string::npos);
  const auto followed = run({"--json", "logs", "amf", "--follow", "--timeout", "300"});
  ASSERT_EQ(followed.code, kExitOk);
  std::istringstream lines(followed.out);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(json::parse(line)["service"], "amf");
    ++count;
  }
  EXPECT_GT(count, 0);
}

TEST_F(Cli, SeedCheckAndDocument) {
  const auto check = run({"seed", "--check"});
  ASSERT_EQ(check.code, kExitOk) << check.err;
  EXPECT_EQ(check.out.rfind("no findings (", 0), 0u) << check.out;
  EXPECT_NE(check.out.find("PLMN 00101"), std::string::npos);

  auto lab = load_lab(make_config(lab_dir_, {}));
  const auto& orch = *lab->orchestrator;
  const auto seeds = build_seed_set(orch.environment().subscribers, plmn_from_settings(orch.settings()));
  EXPECT_EQ(run({"seed"}).out, canonical_seed_document(seeds));

  rig::write(lab_dir_ / "settings" / "global.env",
             read_file(lab_dir_ / "settings" / "global.env") + "MCC=999\n");
  const auto mismatch = run({"--json", "seed", "--check"});
  EXPECT_EQ(mismatch.code, kExitFindings);
  EXPECT_FALSE(json::parse(mismatch.out)["report"].empty());
}

TEST_F(Cli, MissingLabIsARuntimeError) {
  const auto r = run_raw({"--lab", (dir_.path() / "absent").string(), "list"});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
}
