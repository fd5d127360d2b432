// Copyright 2026 The EcoTune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ecotune/analysis.h"
#include "ecotune/backends.h"
#include "ecotune/error.h"
#include "ecotune/number_format.h"
#include "ecotune/orchestrator.h"
#include "ecotune/param_space.h"
#include "ecotune/report.h"
#include "ecotune/service.h"
#include "ecotune/sobol.h"
#include "ecotune/workspace.h"

namespace ecotune::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kNotFound, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteOutput(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) Fail(ErrorCode::kStorage, "cannot write " + path);
}

json ReadJson(const fs::path& path) {
  json doc = json::parse(ReadFile(path), nullptr, false);
  if (doc.is_discarded()) Fail(ErrorCode::kParse, path.string() + ": not JSON");
  return doc;
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kStorage:
    case ErrorCode::kGateway:
    case ErrorCode::kStartup:
      return 2;
    default:
      return 1;
  }
}

// Flags shared by the commands that build or open sessions.
struct SessionFlags {
  std::string data_dir = "ecotune-data";
  std::string session_id;
  std::string definition_file;
  std::string strategy = "enhanced";
  std::string space = "vllm-v1";
  std::string backend = "sim";
  std::string runner;
  std::string gateway = "scripted";
  std::string script_file;
  std::string endpoint;
  std::string model;
  std::uint64_t seed = 0;
  double threshold = 1.80;
  double threshold_image = 0;
  int max_iter = 6;
  int retry_limit = 3;
  std::string approval_gate;  // "on", "off" or empty
  std::string template_dir;
  std::string hardware_note;
  int images = 500;
  int prompts = 1000;
  bool logical_clock = false;
  bool no_drive = false;
};

std::unique_ptr<Workspace> OpenWorkspace(const std::string& dir, bool logical) {
  std::unique_ptr<Clock> clock;
  if (logical) {
    clock = std::make_unique<LogicalClock>();
  } else {
    clock = std::make_unique<SystemClock>();
  }
  return std::make_unique<Workspace>(dir, std::move(clock));
}

std::vector<std::string> SplitCommand(const std::string& text) {
  std::vector<std::string> argv;
  std::istringstream in(text);
  std::string word;
  while (in >> word) argv.push_back(word);
  return argv;
}

SessionDefinition BuildDefinition(const SessionFlags& f) {
  SessionDefinition d;
  if (!f.definition_file.empty()) {
    d = DefinitionFromJson(ReadJson(f.definition_file));
    if (!f.session_id.empty()) d.session_id = f.session_id;
    if (d.gateway.kind == GatewayKind::kScripted && !f.script_file.empty()) {
      d.gateway.script = SplitScript(ReadFile(f.script_file));
    }
    return d;
  }
  d.session_id = f.session_id;
  d.strategy = ParseSessionStrategy(f.strategy);
  d.space_id = f.space;
  d.backend = f.backend;
  d.runner_command = SplitCommand(f.runner);
  d.workload = f.space == kPytorchMultimodalSpaceId ? WorkloadSpec::Multimodal(f.images)
                                                     : WorkloadSpec::Text(f.prompts);
  d.gateway.kind = ParseGatewayKind(f.gateway);
  if (d.gateway.kind == GatewayKind::kScripted && !f.script_file.empty()) {
    d.gateway.script = SplitScript(ReadFile(f.script_file));
  }
  if (d.gateway.kind == GatewayKind::kApi) {
    d.gateway.endpoint = f.endpoint;
    d.gateway.model_name = f.model;
    d.gateway = GatewayMode::ApiFromEnvironment(d.gateway);
  }
  d.stopping.threshold = f.threshold;
  if (f.threshold_image > 0) d.stopping.threshold_image = f.threshold_image;
  d.stopping.max_iterations = f.max_iter;
  d.seed = f.seed;
  d.error_retry_limit = f.retry_limit;
  if (f.approval_gate == "on") d.approval_gate = true;
  if (f.approval_gate == "off") d.approval_gate = false;
  d.template_dir = f.template_dir;
  if (!f.hardware_note.empty()) d.hardware_note = f.hardware_note;
  return d;
}

void AddSessionFlags(CLI::App* cmd, SessionFlags& f) {
  cmd->add_option("--data-dir", f.data_dir, "Data directory")->capture_default_str();
  cmd->add_option("--session-id", f.session_id, "Session id (generated when empty)");
  cmd->add_option("--definition", f.definition_file, "Session definition JSON file");
  cmd->add_option("--strategy", f.strategy, "enhanced, baseline or sobol")
      ->check(CLI::IsMember({"enhanced", "baseline", "sobol"}))
      ->capture_default_str();
  cmd->add_option("--space", f.space, "Parameter space id")->capture_default_str();
  cmd->add_option("--backend", f.backend, "sim or external")
      ->check(CLI::IsMember({"sim", "external"}))
      ->capture_default_str();
  cmd->add_option("--runner", f.runner, "Experiment runner command (external backend)");
  cmd->add_option("--gateway", f.gateway, "api, relay or scripted")
      ->check(CLI::IsMember({"api", "relay", "scripted"}))
      ->capture_default_str();
  cmd->add_option("--script", f.script_file, "Scripted replies separated by '%%' lines");
  cmd->add_option("--endpoint", f.endpoint, "Chat-completions endpoint (api gateway)");
  cmd->add_option("--model", f.model, "Model name (api gateway)");
  cmd->add_option("--seed", f.seed, "Simulation seed")->capture_default_str();
  cmd->add_option("--threshold", f.threshold, "Stopping threshold in J/token")
      ->capture_default_str();
  cmd->add_option("--threshold-image", f.threshold_image, "Reported threshold in J/image");
  cmd->add_option("--max-iter", f.max_iter, "Maximum evaluated configurations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--retry-limit", f.retry_limit, "Consecutive error prompts allowed")
      ->capture_default_str();
  cmd->add_option("--approval-gate", f.approval_gate, "on or off (default by gateway)")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--templates", f.template_dir, "Directory of prompt template overrides");
  cmd->add_option("--hardware-note", f.hardware_note, "Hardware description for prompts");
  cmd->add_option("--images", f.images, "Images per multimodal workload")
      ->capture_default_str();
  cmd->add_option("--prompts", f.prompts, "Prompts per text workload")->capture_default_str();
  cmd->add_flag("--logical-clock", f.logical_clock,
                "Deterministic timestamps (implied by the scripted gateway)");
  cmd->add_flag("--no-drive", f.no_drive, "Do not advance automatic transitions");
}

const ParamSpace& SpaceOrFail(const SpaceRegistry& registry, const std::string& id) {
  return registry.Get(id);
}

std::string SpaceText(const ParamSpace& space) {
  std::ostringstream out;
  out << "space " << space.space_id() << " (" << space.dimension() << " parameters)\n";
  for (const auto& d : space.domains()) {
    out << "  " << d.name << "  " << DomainKindName(d.kind) << "  " << d.DescribeRange();
    out << "  default " << ParamValueText(space.defaults().Get(d.name));
    if (!d.category.empty()) out << "  [" << d.category << "]";
    out << "\n";
  }
  return out.str();
}

Configuration ConfigFromAssignments(const std::vector<std::string>& sets, const ParamSpace& space,
                                    Configuration base) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) Fail(ErrorCode::kParse, "expected name=value, got '" + s + "'");
    const std::string name = std::string(Trim(std::string_view(s).substr(0, eq)));
    const ParamDomain* d = space.Find(name);
    if (!d) Fail(ErrorCode::kParse, "unknown parameter '" + name + "'");
    auto value = CoerceValue(std::string_view(s).substr(eq + 1), *d);
    if (!value) Fail(ErrorCode::kParse, "unreadable value for '" + name + "'");
    base.Set(name, *value);
  }
  return base;
}

int Serve(const std::string& bind, const std::string& data_dir, const std::string& token,
          const std::string& gateway, bool logical, std::ostream& out) {
  ServiceConfig config;
  const auto colon = bind.rfind(':');
  config.bind_address = colon == std::string::npos ? bind : bind.substr(0, colon);
  if (colon != std::string::npos) {
    auto port = ParseInt(bind.substr(colon + 1));
    if (!port) Fail(ErrorCode::kValidation, "bad port in --bind " + bind);
    config.port = static_cast<int>(*port);
  }
  config.data_dir = data_dir;
  config.auth_token = token;
  config.gateway_defaults.kind = ParseGatewayKind(gateway);
  if (config.gateway_defaults.kind == GatewayKind::kApi) {
    config.gateway_defaults = GatewayMode::ApiFromEnvironment(config.gateway_defaults);
  }
  config.logical_clock = logical;

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(config);
  const int port = service.Start();
  out << "listening on " << config.bind_address << ":" << port << "\n" << std::flush;
  int sig = 0;
  sigwait(&signals, &sig);
  service.Shutdown();
  out << "stopped\n";
  return 0;
}

}  // namespace

std::vector<std::string> SplitScript(const std::string& text) {
  std::vector<std::string> replies;
  std::string current;
  bool any = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line) == "%%") {
      replies.push_back(current);
      current.clear();
      any = false;
      continue;
    }
    current += line;
    current += "\n";
    any = any || !Trim(line).empty();
  }
  if (any) replies.push_back(current);
  return replies;
}

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Energy-aware runtime parameter tuning harness", "ecotune"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kServiceVersion));

  // space
  std::string space_id = "vllm-v1";
  std::string out_path;
  auto* space_cmd = app.add_subcommand("space", "Inspect parameter spaces")->require_subcommand(1);
  auto* space_show = space_cmd->add_subcommand("show", "Print a space as text");
  auto* space_export = space_cmd->add_subcommand("export", "Write a space as JSON");
  auto* space_list = space_cmd->add_subcommand("list", "List builtin space ids");
  for (auto* c : {space_show, space_export}) {
    c->add_option("--space", space_id, "Space id")->capture_default_str();
    c->add_option("--out", out_path, "Output file (stdout when omitted)");
  }

  // sobol
  std::size_t sobol_n = 30;
  std::uint64_t sobol_skip = 1;
  SessionFlags sobol_flags;
  sobol_flags.strategy = "sobol";
  auto* sobol_cmd = app.add_subcommand("sobol", "Sobol baseline")->require_subcommand(1);
  auto* sobol_plan = sobol_cmd->add_subcommand("plan", "Print a Sobol plan as CSV");
  sobol_plan->add_option("--space", space_id, "Space id")->capture_default_str();
  sobol_plan->add_option("--n", sobol_n, "Number of configurations")->capture_default_str();
  sobol_plan->add_option("--skip", sobol_skip, "Leading points to skip")->capture_default_str();
  sobol_plan->add_option("--out", out_path, "Output file (stdout when omitted)");
  auto* sobol_run = sobol_cmd->add_subcommand("run", "Evaluate a Sobol plan as a session");
  sobol_run->add_option("--n", sobol_n, "Number of configurations")->capture_default_str();
  AddSessionFlags(sobol_run, sobol_flags);

  // session
  SessionFlags flags;
  std::string reply_text;
  std::string reply_file;
  bool approve = false;
  bool reject = false;
  std::string edit_file;
  std::vector<std::string> edit_sets;
  std::string note;
  bool stop = false;
  auto* session_cmd = app.add_subcommand("session", "LLM-guided sessions")->require_subcommand(1);
  auto* session_start = session_cmd->add_subcommand("start", "Create a session and drive it");
  AddSessionFlags(session_start, flags);
  auto* session_step = session_cmd->add_subcommand("step", "Apply an operator event");
  auto* session_summary = session_cmd->add_subcommand("summary", "Convergence summary");
  auto* session_show = session_cmd->add_subcommand("show", "Current session resource");
  auto* session_prompt = session_cmd->add_subcommand("prompt", "Print the prompt awaiting a reply");
  auto* session_events = session_cmd->add_subcommand("events", "Print the transcript (JSONL)");
  auto* session_records = session_cmd->add_subcommand("records", "Print the records CSV");
  for (auto* c : {session_step, session_summary, session_show, session_prompt, session_events,
                  session_records}) {
    c->add_option("--data-dir", flags.data_dir, "Data directory")->capture_default_str();
    c->add_option("--session-id", flags.session_id, "Session id")->required();
    c->add_flag("--logical-clock", flags.logical_clock, "Deterministic timestamps");
  }
  session_step->add_option("--reply", reply_text, "Relay reply text");
  session_step->add_option("--reply-file", reply_file, "File holding the relay reply");
  session_step->add_flag("--approve", approve, "Approve the proposal");
  session_step->add_flag("--reject", reject, "Reject the proposal");
  session_step->add_option("--edit", edit_file, "Approve an edited configuration (JSON file)");
  session_step->add_option("--set", edit_sets, "Approve with edits name=value");
  session_step->add_option("--note", note, "Operator note");
  session_step->add_flag("--stop", stop, "Stop the session");
  session_step->add_flag("--no-drive", flags.no_drive, "Do not advance automatic transitions");

  // trial
  SessionFlags trial_flags;
  std::vector<std::string> trial_sets;
  std::string trial_config_file;
  auto* trial_cmd = app.add_subcommand("trial", "Single trials")->require_subcommand(1);
  auto* trial_run = trial_cmd->add_subcommand("run", "Run one configuration");
  trial_run->add_option("--space", trial_flags.space, "Space id")->capture_default_str();
  trial_run->add_option("--backend", trial_flags.backend, "sim or external")
      ->check(CLI::IsMember({"sim", "external"}))
      ->capture_default_str();
  trial_run->add_option("--runner", trial_flags.runner, "Runner command (external backend)");
  trial_run->add_option("--seed", trial_flags.seed, "Simulation seed")->capture_default_str();
  trial_run->add_option("--config", trial_config_file, "Configuration JSON file");
  trial_run->add_option("--set", trial_sets, "Override name=value (repeatable)");
  trial_run->add_option("--images", trial_flags.images, "Images per multimodal workload")
      ->capture_default_str();
  trial_run->add_option("--data-dir", trial_flags.data_dir, "Record into this data directory");
  trial_run->add_option("--session-id", trial_flags.session_id,
                        "Record as a manual trial of this session");

  // analyze
  std::vector<std::string> analyze_sessions;
  std::vector<std::string> compare_a;
  std::vector<std::string> compare_b;
  std::string analyze_dir = "ecotune-data";
  std::string plot_dir;
  double analyze_threshold = 1.80;
  double analyze_threshold_image = 0;
  int analyze_max_iter = 6;
  auto* analyze = app.add_subcommand("analyze", "Convergence, comparison and Pareto report");
  analyze->add_option("--data-dir", analyze_dir, "Data directory")->capture_default_str();
  analyze->add_option("--session", analyze_sessions, "Session id (repeatable)");
  analyze->add_option("--compare-a", compare_a, "First group for the paired t-test")
      ->delimiter(',');
  analyze->add_option("--compare-b", compare_b, "Second group for the paired t-test")
      ->delimiter(',');
  analyze->add_option("--threshold", analyze_threshold, "Threshold in J/token")
      ->capture_default_str();
  analyze->add_option("--threshold-image", analyze_threshold_image, "Threshold in J/image");
  analyze->add_option("--max-iter", analyze_max_iter, "Censoring horizon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  analyze->add_option("--plot-dir", plot_dir, "Write band and scatter CSV files here");
  analyze->add_option("--out", out_path, "Output file (stdout when omitted)");

  // breakeven
  double be_prompts = 4;
  double be_wh = 3;
  double be_trial = 0;
  double be_savings = 0;
  auto* breakeven = app.add_subcommand("breakeven", "Optimization overhead break-even");
  breakeven->add_option("--prompts", be_prompts, "LLM prompts issued")->capture_default_str();
  breakeven->add_option("--wh-per-prompt", be_wh, "Energy per prompt in Wh")
      ->capture_default_str();
  breakeven->add_option("--trial-energy", be_trial, "Energy of all trials in J")->required();
  breakeven->add_option("--savings", be_savings, "Savings per workload in J")->required();

  // serve
  std::string bind = "127.0.0.1:8080";
  std::string serve_dir = "ecotune-data";
  std::string auth_token;
  std::string serve_gateway = "relay";
  bool serve_logical = false;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--bind", bind, "host:port")->capture_default_str();
  serve->add_option("--data-dir", serve_dir, "Data directory")->capture_default_str();
  serve->add_option("--auth-token", auth_token, "Bearer token required on every request")
      ->envname("ECOTUNE_AUTH_TOKEN");
  serve->add_option("--gateway", serve_gateway, "Default gateway for new sessions")
      ->check(CLI::IsMember({"api", "relay", "scripted"}))
      ->capture_default_str();
  serve->add_flag("--logical-clock", serve_logical, "Deterministic timestamps");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << kServiceVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    SpaceRegistry registry;
    if (*space_cmd) {
      if (*space_list) {
        for (const auto& id : registry.Ids()) out << id << "\n";
      } else if (*space_show) {
        WriteOutput(SpaceText(SpaceOrFail(registry, space_id)), out_path, out);
      } else {
        WriteOutput(SpaceToJson(SpaceOrFail(registry, space_id)).dump(2) + "\n", out_path, out);
      }
      return 0;
    }

    if (*sobol_plan) {
      const ParamSpace& space = SpaceOrFail(registry, space_id);
      WriteOutput(SobolPlanCsv(MakeSobolPlan(space, sobol_n, sobol_skip), space), out_path, out);
      return 0;
    }

    if (*sobol_run || *session_start) {
      SessionFlags& f = *sobol_run ? sobol_flags : flags;
      if (*sobol_run) {
        f.strategy = "sobol";
        f.max_iter = static_cast<int>(sobol_n);
      }
      SessionDefinition d = BuildDefinition(f);
      const bool logical = f.logical_clock || (d.strategy != SessionStrategy::kSobol &&
                                               d.gateway.kind == GatewayKind::kScripted);
      auto ws = OpenWorkspace(f.data_dir, logical);
      auto session = ws->Create(std::move(d));
      if (!f.no_drive) session->Drive();
      out << session->ToJson().dump(2) << "\n";
      return Terminal(session->state()) && session->state() == SessionState::kAborted ? 1 : 0;
    }

    if (*session_cmd) {
      auto ws = OpenWorkspace(flags.data_dir, flags.logical_clock);
      if (*session_records) {
        ws->LoadDefinition(flags.session_id);
        out << ws->store().SessionCsv(flags.session_id);
        return 0;
      }
      if (*session_events) {
        out << ReadFile(ws->SessionDir(flags.session_id) / "events.jsonl");
        return 0;
      }
      auto session = ws->Open(flags.session_id);
      if (*session_summary) {
        out << SummaryToJson(session->Summary(), ws->spaces()).dump(2) << "\n";
        return 0;
      }
      if (*session_show) {
        out << session->ToJson().dump(2) << "\n";
        return 0;
      }
      if (*session_prompt) {
        auto prompt = session->CurrentPrompt();
        if (!prompt) Fail(ErrorCode::kConflict, "no prompt awaits a reply");
        out << prompt->body;
        if (prompt->body.empty() || prompt->body.back() != '\n') out << "\n";
        return 0;
      }
      // step
      const int actions = (!reply_text.empty() || !reply_file.empty()) + approve + reject +
                          (!edit_file.empty() || !edit_sets.empty()) + stop;
      if (actions > 1) Fail(ErrorCode::kValidation, "give at most one operator event");
      if (!reply_text.empty() || !reply_file.empty()) {
        auto seq = session->PendingSequence();
        if (!seq) Fail(ErrorCode::kConflict, "no prompt awaits a reply");
        session->FulfillRelay(*seq, reply_file.empty() ? reply_text : ReadFile(reply_file));
      } else if (approve || reject) {
        Approval a;
        a.decision = approve ? ApprovalDecision::kApprove : ApprovalDecision::kReject;
        a.note = note;
        session->SubmitApproval(std::move(a));
      } else if (!edit_file.empty() || !edit_sets.empty()) {
        Approval a;
        a.decision = ApprovalDecision::kEdit;
        a.note = note;
        Configuration base = session->proposal().value_or(DefaultConfig(session->space()));
        if (!edit_file.empty()) base = ConfigFromJson(ReadJson(edit_file), session->space());
        a.edited_config = ConfigFromAssignments(edit_sets, session->space(), base);
        session->SubmitApproval(std::move(a));
      } else if (stop) {
        session->Stop(note);
      }
      if (!flags.no_drive) session->Drive();
      out << session->ToJson().dump(2) << "\n";
      return 0;
    }

    if (*trial_run) {
      const ParamSpace& space = SpaceOrFail(registry, trial_flags.space);
      Configuration config = trial_config_file.empty()
                                 ? DefaultConfig(space)
                                 : ConfigFromJson(ReadJson(trial_config_file), space);
      config = ConfigFromAssignments(trial_sets, space, config);
      ValidationReport report = Validate(config, space);
      if (!report.valid) Fail(ErrorCode::kValidation, report.Describe());
      WorkloadSpec workload = space.space_id() == kPytorchMultimodalSpaceId
                                  ? WorkloadSpec::Multimodal(trial_flags.images)
                                  : WorkloadSpec::Text();
      SessionDefinition d;
      d.session_id = trial_flags.session_id.empty() ? "manual" : trial_flags.session_id;
      d.backend = trial_flags.backend;
      d.runner_command = SplitCommand(trial_flags.runner);
      d.seed = trial_flags.seed;
      d.space_id = space.space_id();
      const fs::path work = trial_flags.data_dir.empty() || trial_flags.data_dir == "ecotune-data"
                                ? fs::path("ecotune-trials")
                                : fs::path(trial_flags.data_dir) / "manual";
      auto backend = MakeBackend(d, space, work);
      TrialResult result = backend->RunTrial(config, workload);
      json j = TrialResultToJson(result, space);
      if (!trial_flags.session_id.empty()) {
        auto ws = OpenWorkspace(trial_flags.data_dir, false);
        auto existing = ws->store().LoadSession(trial_flags.session_id);
        const std::int64_t iteration = existing.empty() ? 1 : existing.back().iteration + 1;
        if (existing.empty()) {
          ws->store().RegisterSession(
              {trial_flags.session_id, "manual", space.space_id(), ws->clock().NowIso8601()});
        }
        RunRecord record = MakeRunRecord(trial_flags.session_id, RecordStrategy::kManual,
                                         iteration, result, ws->clock().NowIso8601());
        ws->store().Append(record);
        j["recorded_iteration"] = iteration;
      }
      out << j.dump(2) << "\n";
      return result.ok() ? 0 : 1;
    }

    if (*analyze) {
      auto ws = OpenWorkspace(analyze_dir, false);
      AnalysisOptions options;
      options.threshold = analyze_threshold;
      if (analyze_threshold_image > 0) options.threshold_image = analyze_threshold_image;
      options.max_iterations = analyze_max_iter;
      std::vector<std::string> ids = analyze_sessions;
      for (const auto& group : {compare_a, compare_b}) {
        for (const auto& id : group) {
          if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
        }
      }
      if (ids.empty()) Fail(ErrorCode::kValidation, "name at least one --session");
      std::vector<std::vector<RunRecord>> records;
      for (const auto& id : ids) {
        auto rows = ws->store().LoadSession(id);
        if (rows.empty()) Fail(ErrorCode::kNotFound, "no records for session '" + id + "'");
        records.push_back(std::move(rows));
      }
      MultiSessionReport report = BuildReport(records, options);
      if (!compare_a.empty() || !compare_b.empty()) {
        auto pick = [&](const std::vector<std::string>& group) {
          std::vector<SessionAnalysis> out_group;
          for (const auto& id : group) {
            for (const auto& s : report.sessions) {
              if (s.session_id == id) out_group.push_back(s);
            }
          }
          return out_group;
        };
        report.comparison = CompareIterations(pick(compare_a), pick(compare_b));
      }
      if (!plot_dir.empty()) {
        fs::create_directories(plot_dir);
        for (const auto& [strategy, band] : report.bands) {
          WriteOutput(BandCsv(band), (fs::path(plot_dir) / ("band_" + strategy + ".csv")).string(),
                      out);
        }
        WriteOutput(ScatterCsv(report.scatter), (fs::path(plot_dir) / "pareto.csv").string(),
                    out);
      }
      WriteOutput(ReportToJson(report, ws->spaces()).dump(2) + "\n", out_path, out);
      return 0;
    }

    if (*breakeven) {
      BreakEvenReport r = BreakEven(be_prompts, be_wh, be_trial, be_savings);
      out << BreakEvenToJson(r).dump(2) << "\n";
      return 0;
    }

    if (*serve) return Serve(bind, serve_dir, auth_token, serve_gateway, serve_logical, out);
  } catch (const Error& e) {
    err << "error (" << ErrorCodeName(e.code()) << "): " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace ecotune::cli
