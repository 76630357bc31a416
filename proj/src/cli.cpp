#include "labcube/cli.hpp"

#include <csignal>
#include <iomanip>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "labcube/api.hpp"
#include "labcube/error.hpp"
#include "labcube/json_codec.hpp"
#include "labcube/monitor.hpp"

namespace labcube {

using nlohmann::json;

namespace {

struct Options {
  std::string lab_dir;
  std::string state_file;
  bool json_output = false;

  std::string stack;
  std::string out_dir;
  bool replace = false;
  bool emulated = false;
  bool watch = false;
  int count = 0;
  int interval_ms = 1000;
  std::vector<std::string> services;
  bool follow = false;
  int timeout_ms = 0;
  bool check = false;
  std::string bind;
};

void print_report(std::ostream& out, const ValidationReport& report) {
  for (const auto& f : report.findings()) {
    out << to_string(f.severity) << " " << f.code << " " << f.subject << ": " << f.message << "\n";
  }
}

void print_session(std::ostream& out, const StackSession& s) {
  out << "session " << s.id << " " << s.stack << " " << to_string(s.state) << " (" << s.applied << "/"
      << s.planned << " actions)";
  if (s.failure) out << ": " << *s.failure;
  out << "\n";
}

void print_snapshot(std::ostream& out, const HealthSnapshot& snap) {
  if (!snap.session_id) {
    out << "no session  aggregate " << to_string(snap.aggregate) << "\n";
    return;
  }
  out << "stack " << snap.stack << "  session " << *snap.session_id << " "
      << to_string(*snap.session_state) << "  aggregate " << to_string(snap.aggregate) << "\n";
  for (const auto& s : snap.per_service) {
    out << "  " << std::left << std::setw(12) << s.service << std::setw(10) << to_string(s.status.state)
        << std::setw(8) << to_string(s.color) << s.status.host;
    if (s.status.exit_code) out << "  exit " << *s.status.exit_code;
    out << "\n";
  }
}

void print_log(std::ostream& out, const TaggedLogEvent& e, bool as_json) {
  if (as_json) {
    json j = codec::to_json(e);
    j["kind"] = to_string(e.event.kind);
    out << j.dump() << "\n";
    return;
  }
  const auto ts = codec::format_timestamp(e.event.ts);
  switch (e.event.kind) {
    case LogEventKind::Line:
      out << ts << " " << e.event.service << " [" << to_string(e.event.channel) << "] " << e.event.line << "\n";
      break;
    case LogEventKind::Gap: out << ts << " " << e.event.service << " ... " << e.event.dropped << " lines dropped\n"; break;
    case LogEventKind::End: out << ts << " " << e.event.service << " (end of stream)\n"; break;
  }
  out.flush();
}

void report_error(std::ostream& out, std::ostream& err, const std::exception& e, bool as_json) {
  const api::ApiError mapped = api::to_api_error(e);
  if (as_json) {
    json body = api::error_body(mapped);
    if (const auto* le = dynamic_cast<const Error*>(&e)) body["error"]["cause"] = le->code();
    out << body.dump(2) << "\n";
    return;
  }
  const auto* le = dynamic_cast<const Error*>(&e);
  err << "error: " << (le ? le->code() : mapped.code) << ": " << e.what() << "\n";
  if (mapped.report) print_report(err, *mapped.report);
}

int cmd_seed(LabContext& lab, const Options& o, std::ostream& out) {
  const auto& orch = *lab.orchestrator;
  ValidationReport report;
  const Plmn plmn = plmn_from_settings(orch.settings());
  for (const auto& r : orch.environment().subscribers) report.append(validate_subscriber(r, plmn));
  std::optional<SeedSet> seeds;
  if (!report.has_errors()) seeds = build_seed_set(orch.environment().subscribers, plmn);
  if (o.json_output) {
    json j{{"report", codec::to_json(report)}, {"plmn", plmn.prefix()}};
    if (seeds) {
      j["records"] = seeds->records.size();
      if (!o.check) j["document"] = canonical_seed_document(*seeds);
    }
    out << j.dump(2) << "\n";
  } else if (!report.empty()) {
    print_report(out, report);
  } else if (o.check) {
    out << "no findings (" << seeds->records.size() << " subscribers, PLMN " << plmn.prefix() << ")\n";
  } else {
    out << canonical_seed_document(*seeds);
  }
  return report.has_errors() ? kExitFindings : kExitOk;
}

int cmd_serve(LabContext& lab, const Options& o, std::ostream& out) {
  const auto [host, port] = parse_bind(o.bind.empty() ? lab.config.bind : o.bind);
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  api::ApiServer server(lab);
  const int bound = server.start(host, port);
  out << "listening on http://" << host << ":" << bound << "\n";
  out.flush();
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  lab.save_state();
  return kExitOk;
}

int dispatch(const std::string& command, LabContext& lab, const Options& o, std::ostream& out) {
  Orchestrator& orch = *lab.orchestrator;
  const HostRegistry& hosts = orch.environment().hosts;

  if (command == "list") {
    json stacks = json::array();
    for (const auto& e : orch.catalog().entries) {
      const auto& m = e.manifest;
      const CatalogListing l{m.name, m.generation, m.description, m.services.size()};
      if (o.json_output) {
        stacks.push_back(codec::to_json(l));
      } else {
        out << std::left << std::setw(28) << l.name << std::setw(6) << to_string(l.generation) << std::setw(4)
            << l.service_count << l.description << "\n";
      }
    }
    if (o.json_output) out << json{{"stacks", stacks}, {"findings", codec::to_json(orch.catalog().findings)}}.dump(2) << "\n";
    return kExitOk;
  }
  if (command == "validate") {
    const ValidationReport report = orch.validate(o.stack, o.emulated);
    if (o.json_output) out << json{{"stack", o.stack}, {"report", codec::to_json(report)}}.dump(2) << "\n";
    else if (report.empty()) out << "no findings\n";
    else print_report(out, report);
    return report.has_errors() ? kExitFindings : kExitOk;
  }
  if (command == "render") {
    const PreparedStack prepared = orch.prepare(o.stack, o.emulated);
    if (!o.out_dir.empty()) write_rendered(prepared.rendered, o.out_dir);
    if (o.json_output) {
      json configs = json::array();
      for (const auto& c : prepared.rendered) configs.push_back(codec::to_json(c));
      out << json{{"stack", o.stack}, {"configs", configs}}.dump(2) << "\n";
    } else if (!o.out_dir.empty()) {
      for (const auto& c : prepared.rendered) {
        out << (std::filesystem::path(o.out_dir) / output_path(c)).generic_string() << "\n";
      }
    } else {
      for (const auto& c : prepared.rendered) out << "# " << output_path(c).generic_string() << "\n" << c.content;
    }
    return kExitOk;
  }
  if (command == "start") {
    const auto policy = o.replace ? StartPolicy::ReplaceActive : StartPolicy::RejectIfActive;
    StackSession s;
    try {
      s = orch.start_stack(o.stack, policy, o.emulated);
    } catch (...) {
      lab.save_state();
      throw;
    }
    lab.save_state();
    if (o.json_output) out << json{{"session", codec::to_json(s)}}.dump(2) << "\n";
    else print_session(out, s);
    return kExitOk;
  }
  if (command == "stop") {
    StackSession s;
    try {
      s = orch.stop_stack();
    } catch (...) {
      lab.save_state();
      throw;
    }
    lab.save_state();
    if (o.json_output) out << json{{"session", codec::to_json(s)}}.dump(2) << "\n";
    else print_session(out, s);
    return kExitOk;
  }
  if (command == "status") {
    for (int i = 0; o.count <= 0 || i < o.count; ++i) {
      if (i > 0) std::this_thread::sleep_for(std::chrono::milliseconds(o.interval_ms));
      const auto snap = poll_snapshot(orch.current_session(), hosts, orch.pool());
      if (o.json_output) out << codec::to_json(snap).dump(o.watch ? -1 : 2) << "\n";
      else print_snapshot(out, snap);
      out.flush();
      if (!o.watch) break;
    }
    return kExitOk;
  }
  if (command == "logs") {
    const auto session = orch.current_session();
    if (!o.follow) {
      for (const auto& e : multiplex_logs(session, hosts, orch.pool(), o.services)) print_log(out, e, o.json_output);
      return kExitOk;
    }
    select_services(session, o.services);
    LogSubscription sub(session, hosts, orch.pool(), o.services);
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(o.timeout_ms);
    while (true) {
      auto wait = std::chrono::milliseconds(200);
      if (o.timeout_ms > 0) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) break;
        wait = std::min(wait, left);
      }
      auto e = sub.next(wait);
      if (e) print_log(out, *e, o.json_output);
      else if (sub.finished()) break;
    }
    return kExitOk;
  }
  if (command == "seed") return cmd_seed(lab, o, out);
  if (command == "serve") return cmd_serve(lab, o, out);
  throw std::logic_error("unhandled command " + command);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvironmentMap& env) {
  Options o;
  CLI::App app{"Lab orchestrator for containerized mobile network stacks", "labcube"};
  app.require_subcommand(1);
  app.add_option("--lab", o.lab_dir, "Lab directory (stacks/, templates/, settings/, networks.yaml, hosts.yaml)");
  app.add_option("--state", o.state_file, "State file for the simulated lab between invocations");
  app.add_flag("--json", o.json_output, "Machine-readable output");

  auto* list = app.add_subcommand("list", "List the stack catalog");
  auto* validate = app.add_subcommand("validate", "Validate a stack against the current settings");
  validate->add_option("stack", o.stack)->required();
  validate->add_flag("--emulated", o.emulated, "Use the emulated RAN variant");
  auto* render = app.add_subcommand("render", "Render a stack's configuration files");
  render->add_option("stack", o.stack)->required();
  render->add_option("--out", o.out_dir, "Write files below this directory");
  render->add_flag("--emulated", o.emulated, "Use the emulated RAN variant");
  auto* start = app.add_subcommand("start", "Deploy a stack");
  start->add_option("stack", o.stack)->required();
  start->add_flag("--replace", o.replace, "Stop the active stack first");
  start->add_flag("--emulated", o.emulated, "Use the emulated RAN variant");
  auto* stop = app.add_subcommand("stop", "Tear down the active stack");
  auto* status = app.add_subcommand("status", "Show service health");
  status->add_flag("--watch", o.watch, "Repeat until interrupted");
  status->add_option("--count", o.count, "Number of snapshots with --watch (0: unbounded)")->check(CLI::NonNegativeNumber);
  status->add_option("--interval", o.interval_ms, "Milliseconds between snapshots")->check(CLI::PositiveNumber);
  auto* logs = app.add_subcommand("logs", "Print service logs of the active stack");
  logs->add_option("service", o.services, "Services to include (default: all)");
  logs->add_flag("--follow", o.follow, "Keep streaming new lines");
  logs->add_option("--timeout", o.timeout_ms, "Stop following after this many milliseconds")->check(CLI::NonNegativeNumber);
  auto* seed = app.add_subcommand("seed", "Check or print the subscriber seed set");
  seed->add_flag("--check", o.check, "Validate only");
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--bind", o.bind, "host:port (default CUBE_BIND or 127.0.0.1:8080)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  std::string command;
  for (auto* sub : {list, validate, render, start, stop, status, logs, seed, serve}) {
    if (sub->parsed()) command = sub->get_name();
  }

  try {
    std::filesystem::path lab_dir = "lab";
    if (!o.lab_dir.empty()) lab_dir = o.lab_dir;
    else if (auto it = env.find("CUBE_LAB"); it != env.end() && !it->second.empty()) lab_dir = it->second;
    LabConfig config = make_config(lab_dir, env);
    if (!o.state_file.empty()) config.state_file = std::filesystem::path(o.state_file);
    auto lab = load_lab(config);
    if (!o.json_output) print_report(err, lab->load_warnings);
    return dispatch(command, *lab, o, out);
  } catch (const ValidationFailed& e) {
    report_error(out, err, e, o.json_output);
    return kExitFindings;
  } catch (const std::exception& e) {
    report_error(out, err, e, o.json_output);
    return kExitRuntime;
  }
}

}  // namespace labcube
