#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "labcube/error.hpp"
#include "labcube/monitor.hpp"
#include "oracles.hpp"
#include "rig.hpp"

using namespace labcube;

namespace {

const std::string kStack = "srsran-open5gs-5gsa";

ContainerStatus status(ContainerState s, std::optional<int> exit = std::nullopt) {
  ContainerStatus st;
  st.state = s;
  st.exit_code = exit;
  return st;
}

}  // namespace

TEST(Health, ClassificationTable) {
  using S = ContainerState;
  using C = HealthColor;
  EXPECT_EQ(classify_service(status(S::Running), ServiceRole::CoreNf), C::Green);
  EXPECT_EQ(classify_service(status(S::Creating), ServiceRole::Ran), C::Yellow);
  EXPECT_EQ(classify_service(status(S::Starting), ServiceRole::Db), C::Yellow);
  EXPECT_EQ(classify_service(status(S::Exited, 0), ServiceRole::Util), C::Green);
  EXPECT_EQ(classify_service(status(S::Exited, 1), ServiceRole::Util), C::Red);
  EXPECT_EQ(classify_service(status(S::Exited, 0), ServiceRole::CoreNf), C::Red);
  EXPECT_EQ(classify_service(status(S::Missing), ServiceRole::Util), C::Red);
  for (auto role : {ServiceRole::CoreNf, ServiceRole::Ran, ServiceRole::Ims, ServiceRole::Db, ServiceRole::Util}) {
    for (auto s : {S::Creating, S::Starting, S::Running, S::Exited, S::Missing}) {
      for (std::optional<int> exit : {std::optional<int>{}, std::optional<int>{0}, std::optional<int>{2}}) {
        if ((s == S::Exited) != exit.has_value()) continue;
        EXPECT_EQ(classify_service(status(s, exit), role), oracle::color_table(s, exit, role));
      }
    }
  }
}

TEST(Health, AggregateIsWorstNonGray) {
  using C = HealthColor;
  EXPECT_EQ(aggregate_health({}), C::Gray);
  EXPECT_EQ(aggregate_health({C::Gray, C::Gray}), C::Gray);
  EXPECT_EQ(aggregate_health({C::Gray, C::Green}), C::Green);
  EXPECT_EQ(aggregate_health({C::Green, C::Yellow, C::Green}), C::Yellow);
  EXPECT_EQ(aggregate_health({C::Yellow, C::Red, C::Gray}), C::Red);
  std::mt19937 rng(5);
  for (int i = 0; i < 2000; ++i) {
    std::vector<C> colors(rng() % 8);
    for (auto& c : colors) c = static_cast<C>(rng() % 4);
    const C whole = aggregate_health(colors);
    std::shuffle(colors.begin(), colors.end(), rng);
    ASSERT_EQ(aggregate_health(colors), whole);
    ASSERT_EQ(whole, oracle::max_dominance(colors));
  }
}

TEST(Snapshot, ReflectsTheRunningSession) {
  auto r = rig::make_fixture_rig();
  const auto& hosts = r->orch->environment().hosts;
  const auto empty = poll_snapshot(std::nullopt, hosts, r->orch->pool());
  EXPECT_EQ(empty.aggregate, HealthColor::Gray);
  EXPECT_TRUE(empty.per_service.empty());

  r->orch->start_stack(kStack, StartPolicy::RejectIfActive);
  auto snap = poll_snapshot(r->orch->current_session(), hosts, r->orch->pool());
  EXPECT_EQ(snap.stack, kStack);
  EXPECT_EQ(snap.session_state, SessionState::Running);
  ASSERT_EQ(snap.per_service.size(), 8u);
  EXPECT_EQ(snap.per_service[0].service, "gnb");
  EXPECT_EQ(snap.per_service[0].status.host, "ran-1");
  EXPECT_EQ(snap.aggregate, HealthColor::Green);

  r->sim->set_exit("controller", container_name(kStack, "smf"), 1);
  snap = poll_snapshot(r->orch->current_session(), hosts, r->orch->pool());
  EXPECT_EQ(snap.aggregate, HealthColor::Red);

  r->sim->set_reachable("ran-1", false);
  snap = poll_snapshot(r->orch->current_session(), hosts, r->orch->pool());
  EXPECT_EQ(snap.per_service[0].status.state, ContainerState::Missing);
  r->sim->set_reachable("ran-1", true);

  r->orch->stop_stack();
  snap = poll_snapshot(r->orch->current_session(), hosts, r->orch->pool());
  EXPECT_TRUE(snap.per_service.empty());
  EXPECT_EQ(snap.aggregate, HealthColor::Gray);
}

TEST(Logs, SelectionErrors) {
  auto r = rig::make_fixture_rig();
  EXPECT_THROW(select_services(r->orch->current_session(), {}), NoActiveSession);
  r->orch->start_stack(kStack, StartPolicy::RejectIfActive);
  const auto session = r->orch->current_session();
  EXPECT_THROW(select_services(session, {"amf", "nope"}), UnknownService);
  const auto picked = select_services(session, {"amf", "gnb"});
  ASSERT_EQ(picked.size(), 2u);
  EXPECT_EQ(picked[0]->name, "gnb");
  EXPECT_EQ(select_services(session, {}).size(), 8u);
}

TEST(Logs, MultiplexOrdersByTimeAcrossHosts) {
  auto r = rig::make_fixture_rig();
  r->orch->start_stack(kStack, StartPolicy::RejectIfActive);
  r->sim->script_logs("ran-1", container_name(kStack, "gnb"), {"cell up"});
  r->sim->script_logs("controller", container_name(kStack, "amf"), {"ue attached"}, LogChannel::Err);
  const auto events = multiplex_logs(r->orch->current_session(), r->orch->environment().hosts, r->orch->pool(),
                                     {"amf", "gnb"});
  ASSERT_GE(events.size(), 4u);
  for (std::size_t i = 1; i < events.size(); ++i) EXPECT_LE(events[i - 1].event.ts, events[i].event.ts);
  EXPECT_EQ(events[events.size() - 2].event.line, "cell up");
  EXPECT_EQ(events.back().event.line, "ue attached");
  EXPECT_EQ(events.back().event.channel, LogChannel::Err);
  EXPECT_EQ(events.back().color, HealthColor::Green);
  for (const auto& e : events) EXPECT_TRUE(e.event.service == "amf" || e.event.service == "gnb");
}

TEST(Logs, SubscriptionFollowsUntilEveryServiceEnds) {
  auto r = rig::make_fixture_rig();
  r->orch->start_stack(kStack, StartPolicy::RejectIfActive);
  LogSubscription sub(r->orch->current_session(), r->orch->environment().hosts, r->orch->pool(), {"amf", "smf"});
  r->sim->script_logs("controller", container_name(kStack, "amf"), {"a1", "a2"});
  r->sim->set_exit("controller", container_name(kStack, "amf"), 0);
  r->sim->set_exit("controller", container_name(kStack, "smf"), 2);
  std::map<std::string, std::vector<std::string>> lines;
  std::map<std::string, int> ends;
  while (auto e = sub.next(std::chrono::seconds(5))) {
    if (e->event.kind == LogEventKind::End) ++ends[e->event.service];
    else lines[e->event.service].push_back(e->event.line);
  }
  EXPECT_TRUE(sub.finished());
  EXPECT_EQ(ends, (std::map<std::string, int>{{"amf", 1}, {"smf", 1}}));
  const auto& amf = lines["amf"];
  ASSERT_GE(amf.size(), 3u);
  EXPECT_EQ(amf[amf.size() - 3], "a1");
  EXPECT_EQ(amf.back(), "process exited with code 0");
}

TEST(Logs, SlowConsumerGetsGapWithDropCount) {
  auto r = rig::make_fixture_rig();
  r->orch->start_stack(kStack, StartPolicy::RejectIfActive);
  const std::string amf = container_name(kStack, "amf");
  std::vector<std::string> burst;
  for (int i = 0; i < 200; ++i) burst.push_back("line " + std::to_string(i));
  r->sim->script_logs("controller", amf, burst);
  std::size_t total = 0;
  {
    std::vector<LogEvent> all;
    r->sim->engine("controller")->stream_logs(amf, false, [&](const LogEvent& e) { all.push_back(e); return true; }, {});
    total = all.size() + 1;  // plus the exit line below
  }
  LogSubscription sub(r->orch->current_session(), r->orch->environment().hosts, r->orch->pool(), {"amf"}, 8);
  r->sim->set_exit("controller", amf, 0);
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  std::size_t delivered = 0, dropped = 0, gaps = 0, ends = 0;
  while (auto e = sub.next(std::chrono::seconds(5))) {
    switch (e->event.kind) {
      case LogEventKind::Line: ++delivered; break;
      case LogEventKind::Gap:
        ++gaps;
        dropped += e->event.dropped;
        break;
      case LogEventKind::End: ++ends; break;
    }
  }
  EXPECT_GE(gaps, 1u);
  EXPECT_EQ(ends, 1u);
  EXPECT_EQ(delivered + dropped, total);
}

TEST(Logs, CloseStopsReaders) {
  auto r = rig::make_fixture_rig();
  r->orch->start_stack(kStack, StartPolicy::RejectIfActive);
  LogSubscription sub(r->orch->current_session(), r->orch->environment().hosts, r->orch->pool(), {});
  while (sub.next(std::chrono::milliseconds(50))) {
  }
  EXPECT_FALSE(sub.finished());
  sub.close();
  EXPECT_TRUE(sub.finished());
  EXPECT_FALSE(sub.next(std::chrono::milliseconds(10)));
}
