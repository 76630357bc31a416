#include <gtest/gtest.h>

#include "labcube/compose.hpp"
#include "labcube/error.hpp"
#include "labcube/orchestrator.hpp"
#include "oracles.hpp"
#include "rig.hpp"

using namespace labcube;

namespace {

const std::string kStack = "srsran-open5gs-5gsa";

template <class A>
std::vector<std::size_t> positions(const std::vector<HostAction>& actions) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (std::holds_alternative<A>(actions[i].action)) out.push_back(i);
  }
  return out;
}

std::size_t index_of_start(const std::vector<HostAction>& actions, const std::string& container) {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (const auto* s = std::get_if<action::StartContainer>(&actions[i].action); s && s->container == container) return i;
  }
  return actions.size();
}

}  // namespace

TEST(Plan, NetworksFirstThenServicesInDependencyOrder) {
  auto r = rig::make_fixture_rig();
  const auto p = r->orch->prepare(kStack);
  const auto& a = p.plan.actions;
  const auto nets = positions<action::CreateNetwork>(a);
  ASSERT_EQ(nets, (std::vector<std::size_t>{0, 1, 2}));
  for (const auto i : nets) EXPECT_EQ(a[i].host, "controller");
  const auto order = topological_order(p.manifest);
  std::size_t last = 0;
  for (const auto& svc : order) {
    const auto* spec = p.manifest.find_service(svc);
    if (spec->target_host != "controller") continue;
    const auto at = index_of_start(a, container_name(kStack, svc));
    ASSERT_LT(at, a.size()) << svc;
    EXPECT_GT(at, last) << svc;
    last = at;
  }
  EXPECT_EQ(positions<action::RemoteComposeUp>(a).size(), 1u);
  EXPECT_EQ(r->sim->action_count(), 0u);
}

TEST(Plan, SeedExecFollowsTheDatabaseStart) {
  auto r = rig::make_fixture_rig();
  const auto p = r->orch->prepare(kStack);
  const auto execs = positions<action::Exec>(p.plan.actions);
  ASSERT_EQ(execs.size(), 1u);
  const auto& exec = std::get<action::Exec>(p.plan.actions[execs[0]].action);
  EXPECT_EQ(exec.container, container_name(kStack, "webdb"));
  EXPECT_EQ(exec.command, seed_command(p.seeds));
  EXPECT_EQ(execs[0], index_of_start(p.plan.actions, exec.container) + 1);
  EXPECT_EQ(p.seeds.records.size(), 3u);
  EXPECT_EQ(p.seeds.plmn.prefix(), "00101");
}

TEST(Plan, StackWithoutDatabaseCannotBeSeeded) {
  auto r = rig::make_fixture_rig();
  auto m = r->orch->catalog().find(kStack)->manifest;
  std::erase_if(m.services, [](const ServiceSpec& s) { return s.role == ServiceRole::Db; });
  const auto p = r->orch->prepare(kStack);
  EXPECT_THROW(plan_deployment(m, p.settings, r->orch->environment().networks, r->orch->environment().hosts, p.seeds,
                               p.rendered),
               PlanningError);
  EXPECT_NO_THROW(plan_deployment(m, p.settings, r->orch->environment().networks, r->orch->environment().hosts,
                                  SeedSet{p.seeds.plmn, {}}, p.rendered));
}

TEST(Plan, RemoteDelegationCarriesRenderedFilesAndCompose) {
  auto r = rig::make_fixture_rig();
  const auto p = r->orch->prepare(kStack);
  const auto& a = p.plan.actions;
  const auto* gnb = p.manifest.find_service("gnb");
  std::vector<std::string> nets;
  for (const auto& att : gnb->attachments) nets.push_back(att.network);
  EXPECT_EQ(oracle::match_delegation(a, container_name(kStack, "gnb"), nets, "controller", "ran-1"), "");
  const auto& transfer = std::get<action::TransferFiles>(a[positions<action::TransferFiles>(a)[0]].action);
  ASSERT_EQ(transfer.files.size(), 1u);
  EXPECT_EQ(transfer.files[0].path, "gnb/etc/srsran/gnb.yaml");
  EXPECT_EQ(transfer.files[0].content, configs_for_service(p.rendered, "gnb")[0].content);
  const auto& up = std::get<action::RemoteComposeUp>(a.back().action);
  const auto doc = parse_compose(up.fragment.document);
  ASSERT_EQ(doc.services.size(), 1u);
  EXPECT_EQ(doc.services[0].container.name, container_name(kStack, "gnb"));
  EXPECT_EQ(doc.services[0].networks[0].ip, Ipv4Address::parse("10.5.0.100"));
}

TEST(Orchestrator, StartRunsAndStopCleansUp) {
  auto r = rig::make_fixture_rig();
  std::vector<SessionState> states;
  r->orch->set_session_observer([&](const std::vector<StackSession>& all) { states.push_back(all.back().state); });
  const auto s = r->orch->start_stack(kStack, StartPolicy::RejectIfActive);
  EXPECT_EQ(s.id, "s1");
  EXPECT_EQ(s.state, SessionState::Running);
  EXPECT_EQ(s.applied, s.planned);
  EXPECT_EQ(s.started_at, from_millis(SimulatedLab::kEpochMillis));
  EXPECT_EQ(r->sim->engine("ran-1")->query_containers(kStack).size(), 1u);
  // The delegated gnb keeps its never-started shell on the controller.
  EXPECT_EQ(r->sim->engine("controller")->query_containers(kStack).size(), 8u);
  for (const auto& st : r->sim->engine("controller")->query_containers(kStack)) {
    EXPECT_EQ(st.state, st.service == "gnb" ? ContainerState::Creating : ContainerState::Running) << st.container;
  }
  EXPECT_EQ(r->sim->attachments("controller", container_name(kStack, "gnb"))[0].network, "bridge");

  const auto stopped = r->orch->stop_stack();
  EXPECT_EQ(stopped.state, SessionState::Stopped);
  for (const auto& host : {"controller", "ran-1", "ran-2"}) {
    EXPECT_TRUE(r->sim->engine(host)->query_containers("").empty()) << host;
    EXPECT_EQ(r->sim->network_names(host), std::vector<std::string>{"bridge"}) << host;
  }
  EXPECT_EQ(states.front(), SessionState::Starting);
  EXPECT_EQ(states.back(), SessionState::Stopped);
  EXPECT_NE(std::find(states.begin(), states.end(), SessionState::Stopping), states.end());

  const auto again = r->orch->stop_stack();
  EXPECT_EQ(again.state, SessionState::Stopped);
}

TEST(Orchestrator, StopWithoutSessionIsAnError) {
  auto r = rig::make_fixture_rig();
  EXPECT_THROW(r->orch->stop_stack(), NoActiveSession);
}

TEST(Orchestrator, PoliciesRejectOrReplace) {
  auto r = rig::make_fixture_rig();
  r->orch->start_stack(kStack, StartPolicy::RejectIfActive);
  const auto before = r->sim->action_count();
  EXPECT_THROW(r->orch->start_stack("osmocom-2g", StartPolicy::RejectIfActive), StackAlreadyActive);
  EXPECT_EQ(r->sim->action_count(), before);
  const auto s = r->orch->start_stack("osmocom-2g", StartPolicy::ReplaceActive);
  EXPECT_EQ(s.id, "s2");
  const auto all = r->orch->sessions();
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].state, SessionState::Stopped);
  EXPECT_EQ(all[1].state, SessionState::Running);
  EXPECT_TRUE(r->sim->engine("ran-1")->query_containers(kStack).empty());
  EXPECT_TRUE(r->sim->engine("controller")->query_containers(kStack).empty());
}

TEST(Orchestrator, UnknownAndInvalidStacks) {
  auto r = rig::make_fixture_rig();
  EXPECT_THROW(r->orch->start_stack("nope", StartPolicy::RejectIfActive), UnknownStack);
  EXPECT_THROW(r->orch->validate("nope"), UnknownStack);
  auto catalog = load_catalog(rig::lab_dir() / "stacks");
  catalog.entries[0].manifest.services[0].target_host = "ran-7";
  auto bad = rig::make(catalog, rig::fixture_environment(), rig::fixture_settings());
  const std::string name = catalog.entries[0].manifest.name;
  EXPECT_TRUE(bad->orch->validate(name).has_code("UNKNOWN_HOST"));
  try {
    bad->orch->start_stack(name, StartPolicy::RejectIfActive);
    FAIL();
  } catch (const ValidationFailed& e) {
    EXPECT_TRUE(e.report().has_code("UNKNOWN_HOST"));
  }
  EXPECT_EQ(bad->sim->action_count(), 0u);
  EXPECT_TRUE(bad->orch->sessions().empty());
}

TEST(Orchestrator, EngineFailureMarksSessionFailed) {
  auto r = rig::make_fixture_rig();
  r->sim->inject_failure({"ran-1", "RemoteComposeUp", "", false, 1});
  EXPECT_THROW(r->orch->start_stack(kStack, StartPolicy::RejectIfActive), EngineError);
  const auto s = *r->orch->current_session();
  EXPECT_EQ(s.state, SessionState::Failed);
  EXPECT_NE(s.failure->find("RemoteComposeUp on ran-1"), std::string::npos);
  EXPECT_EQ(s.applied, s.planned - 1);
  // A failed session still holds resources, so REJECT refuses and REPLACE reaps.
  EXPECT_THROW(r->orch->start_stack(kStack, StartPolicy::RejectIfActive), StackAlreadyActive);
  EXPECT_EQ(r->orch->start_stack(kStack, StartPolicy::ReplaceActive).state, SessionState::Running);
}

TEST(Orchestrator, ReadinessTimeout) {
  auto r = rig::make_fixture_rig();
  const std::string amf = container_name(kStack, "amf");
  r->orch->set_action_observer([&](const HostAction& a) {
    if (std::holds_alternative<action::RemoteComposeUp>(a.action)) r->sim->set_exit("controller", amf, 1);
  });
  EXPECT_THROW(r->orch->start_stack(kStack, StartPolicy::RejectIfActive), EngineError);
  const auto s = *r->orch->current_session();
  EXPECT_EQ(s.state, SessionState::Failed);
  EXPECT_NE(s.failure->find("amf"), std::string::npos);
  EXPECT_EQ(*r->ticks, static_cast<int>(s.manifest.services.size()) + 2);
  EXPECT_EQ(r->orch->stop_stack().state, SessionState::Stopped);
}

TEST(Orchestrator, TeardownErrorsLeaveSessionFailed) {
  auto r = rig::make_fixture_rig();
  r->orch->start_stack(kStack, StartPolicy::RejectIfActive);
  r->sim->inject_failure({"controller", "StopContainer", container_name(kStack, "amf"), false, 1});
  EXPECT_THROW(r->orch->stop_stack(), EngineError);
  EXPECT_EQ(r->orch->current_session()->state, SessionState::Failed);
  EXPECT_EQ(r->orch->stop_stack().state, SessionState::Stopped);
  EXPECT_TRUE(r->sim->engine("controller")->query_containers("").empty());
}

TEST(Orchestrator, SettingsLockAndSink) {
  auto r = rig::make_fixture_rig();
  SettingsMap written;
  r->orch->set_settings_sink([&](const SettingsMap& s) { written = s; });
  auto next = r->orch->settings();
  next.set("TAC", "99");
  r->orch->start_stack(kStack, StartPolicy::RejectIfActive);
  EXPECT_THROW(r->orch->put_settings(next), SettingsLocked);
  r->orch->stop_stack();
  auto bad = next;
  bad.set("MCC", "1");
  EXPECT_THROW(r->orch->put_settings(bad), ValidationFailed);
  r->orch->put_settings(next);
  EXPECT_EQ(written, next);
  EXPECT_EQ(*r->orch->settings().find("TAC"), "99");
  const auto p = r->orch->prepare(kStack);
  EXPECT_EQ(*p.settings.find("TAC"), "99");
}

TEST(Orchestrator, EmulatedVariantRunsOnTheController) {
  auto r = rig::make_fixture_rig();
  const auto s = r->orch->start_stack(kStack, StartPolicy::RejectIfActive, true);
  EXPECT_EQ(s.state, SessionState::Running);
  EXPECT_EQ(s.manifest.generation, Generation::Emulated);
  EXPECT_TRUE(r->sim->engine("ran-1")->query_containers("").empty());
  EXPECT_TRUE(r->sim->transfers("ran-1").empty());
}

TEST(Orchestrator, RestoredSessionCanBeStopped) {
  auto first = rig::make_fixture_rig();
  const auto s = first->orch->start_stack(kStack, StartPolicy::RejectIfActive);
  auto state = first->sim->to_json();
  auto second = rig::make(load_catalog(rig::lab_dir() / "stacks"), rig::fixture_environment(), rig::fixture_settings());
  second->sim = SimulatedLab::from_json(state);
  second->orch = std::make_unique<Orchestrator>(load_catalog(rig::lab_dir() / "stacks"), rig::fixture_settings(),
                                                rig::fixture_environment(), second->sim->make_pool("controller"));
  second->orch->restore_session(s);
  EXPECT_THROW(second->orch->start_stack(kStack, StartPolicy::RejectIfActive), StackAlreadyActive);
  EXPECT_EQ(second->orch->stop_stack().state, SessionState::Stopped);
  EXPECT_TRUE(second->sim->engine("ran-1")->query_containers("").empty());
  EXPECT_EQ(second->orch->start_stack(kStack, StartPolicy::RejectIfActive).id, "s2");
}
