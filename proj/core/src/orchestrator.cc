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

#include "ecotune/orchestrator.h"

#include <algorithm>
#include <cmath>

#include "ecotune/error.h"

namespace ecotune {
namespace {

using nlohmann::json;

template <typename E>
struct Names {
  E value;
  std::string_view text;
};

constexpr Names<SessionState> kStateNames[] = {
    {SessionState::kAwaitingProposal, "AwaitingProposal"},
    {SessionState::kAwaitingRelay, "AwaitingRelay"},
    {SessionState::kAwaitingApproval, "AwaitingApproval"},
    {SessionState::kRunningTrial, "RunningTrial"},
    {SessionState::kCompleted, "Completed"},
    {SessionState::kAborted, "Aborted"},
};

constexpr Names<SessionStrategy> kStrategyNames[] = {
    {SessionStrategy::kEnhanced, "enhanced"},
    {SessionStrategy::kBaseline, "baseline"},
    {SessionStrategy::kSobol, "sobol"},
};

constexpr Names<ApprovalDecision> kDecisionNames[] = {
    {ApprovalDecision::kApprove, "approve"},
    {ApprovalDecision::kReject, "reject"},
    {ApprovalDecision::kEdit, "edit"},
};

template <typename E, std::size_t N>
std::string_view NameOf(const Names<E> (&table)[N], E value) {
  for (const auto& n : table) {
    if (n.value == value) return n.text;
  }
  return "?";
}

template <typename E, std::size_t N>
E ValueOf(const Names<E> (&table)[N], std::string_view text, std::string_view what) {
  for (const auto& n : table) {
    if (n.text == text) return n.value;
  }
  Fail(ErrorCode::kParse, "unknown " + std::string(what) + " '" + std::string(text) + "'");
}

json ValuesJson(const Configuration& config) {
  json j = json::object();
  for (const auto& [name, value] : config.values()) j[name] = ParamValueText(value);
  return j;
}

json PromptJson(const Exchange& ex) {
  return {{"sequence_no", ex.sequence_no},
          {"role", PromptRoleText(ex.prompt.role)},
          {"body", ex.prompt.body}};
}

json ReplyJson(const Exchange& ex) {
  return {{"sequence_no", ex.sequence_no},
          {"reply", *ex.reply},
          {"fulfilled_at", ex.fulfilled_at.value_or("")}};
}

bool IsInput(const std::string& type) {
  return type == "reply" || type == "gateway_error" || type == "approval" || type == "trial" ||
         type == "stopped";
}

}  // namespace

std::string_view SessionStateText(SessionState s) { return NameOf(kStateNames, s); }
SessionState ParseSessionState(std::string_view text) {
  return ValueOf(kStateNames, text, "session state");
}
std::string_view SessionStrategyText(SessionStrategy s) { return NameOf(kStrategyNames, s); }
SessionStrategy ParseSessionStrategy(std::string_view text) {
  return ValueOf(kStrategyNames, text, "strategy");
}
std::string_view ApprovalDecisionText(ApprovalDecision d) { return NameOf(kDecisionNames, d); }
ApprovalDecision ParseApprovalDecision(std::string_view text) {
  return ValueOf(kDecisionNames, text, "approval decision");
}

bool SessionDefinition::ApprovalGateEnabled() const {
  if (strategy == SessionStrategy::kSobol) return false;
  if (approval_gate) return *approval_gate;
  return gateway.kind != GatewayKind::kScripted;
}

void SessionDefinition::Check() const {
  Require(!session_id.empty(), "session_id is required");
  Require(backend == "sim" || backend == "external", "backend must be 'sim' or 'external'");
  Require(backend != "external" || !runner_command.empty(),
          "external backend needs a runner command");
  Require(stopping.max_iterations >= 1, "max_iterations must be at least 1");
  Require(std::isfinite(stopping.threshold), "threshold must be finite");
  Require(error_retry_limit >= 0, "error_retry_limit must be non-negative");
  workload.Check();
  if (strategy != SessionStrategy::kSobol) gateway.Check();
}

json DefinitionToJson(const SessionDefinition& d) {
  json stopping = {{"threshold", d.stopping.threshold},
                   {"max_iterations", d.stopping.max_iterations}};
  if (d.stopping.threshold_image) stopping["threshold_image"] = *d.stopping.threshold_image;
  json j = {{"session_id", d.session_id},
            {"strategy", SessionStrategyText(d.strategy)},
            {"space_id", d.space_id},
            {"backend", d.backend},
            {"runner_command", d.runner_command},
            {"workload", WorkloadToJson(d.workload)},
            {"gateway", GatewayModeToJson(d.gateway)},
            {"stopping", stopping},
            {"seed", d.seed},
            {"error_retry_limit", d.error_retry_limit},
            {"hardware_note", d.hardware_note},
            {"template_dir", d.template_dir}};
  if (d.approval_gate) j["approval_gate"] = *d.approval_gate;
  return j;
}

SessionDefinition DefinitionFromJson(const json& doc) {
  if (!doc.is_object()) Fail(ErrorCode::kParse, "session definition must be an object");
  SessionDefinition d;
  try {
    d.session_id = doc.value("session_id", "");
    d.strategy = ParseSessionStrategy(doc.value("strategy", "enhanced"));
    d.space_id = doc.value("space_id", d.space_id);
    d.backend = doc.value("backend", d.backend);
    d.runner_command = doc.value("runner_command", std::vector<std::string>{});
    if (doc.contains("workload")) {
      d.workload = WorkloadFromJson(doc.at("workload"));
    } else if (d.space_id == kPytorchMultimodalSpaceId) {
      d.workload = WorkloadSpec::Multimodal();
    }
    if (doc.contains("gateway")) d.gateway = GatewayModeFromJson(doc.at("gateway"));
    if (doc.contains("stopping")) {
      const json& s = doc.at("stopping");
      d.stopping.threshold = s.value("threshold", d.stopping.threshold);
      d.stopping.max_iterations = s.value("max_iterations", d.stopping.max_iterations);
      if (s.contains("threshold_image") && !s.at("threshold_image").is_null()) {
        d.stopping.threshold_image = s.at("threshold_image").get<double>();
      }
    }
    d.seed = doc.value("seed", std::uint64_t{0});
    d.error_retry_limit = doc.value("error_retry_limit", d.error_retry_limit);
    if (doc.contains("approval_gate") && !doc.at("approval_gate").is_null()) {
      d.approval_gate = doc.at("approval_gate").get<bool>();
    }
    d.hardware_note = doc.value("hardware_note", d.hardware_note);
    d.template_dir = doc.value("template_dir", "");
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("bad session definition: ") + e.what());
  }
  return d;
}

json SummaryToJson(const SessionSummary& s, const SpaceRegistry& spaces) {
  json j = SessionAnalysisToJson(s.analysis, spaces);
  j["state"] = SessionStateText(s.state);
  j["iteration"] = s.iteration;
  j["recorded_trials"] = s.trials;
  j["error_prompts"] = s.error_prompts;
  if (s.abort_reason) j["abort_reason"] = *s.abort_reason;
  return j;
}

std::unique_ptr<Backend> MakeBackend(const SessionDefinition& d, const ParamSpace& space,
                                     const std::filesystem::path& work_dir) {
  if (d.backend == "sim") {
    SimulatedBackendOptions options;
    options.seed = d.seed;
    return std::make_unique<SimulatedBackend>(space, options);
  }
  if (d.backend == "external") {
    ExternalRunnerOptions options;
    options.command = d.runner_command;
    options.work_dir = work_dir.empty() ? std::filesystem::path("runs") / d.session_id : work_dir;
    return std::make_unique<ExternalProcessBackend>(space, options);
  }
  Fail(ErrorCode::kNotFound, "unknown backend '" + d.backend + "'");
}

Session::Session(SessionDefinition definition, SessionContext context)
    : definition_(std::move(definition)), context_(std::move(context)) {
  definition_.Check();
  Require(context_.spaces && context_.store && context_.clock, "session context is incomplete");
  space_ = &context_.spaces->Get(definition_.space_id);
  if (!definition_.template_dir.empty()) {
    renderer_ = PromptRenderer(TemplateSet::Load(definition_.template_dir));
  }
  if (!context_.backend) context_.backend = MakeBackend(definition_, *space_, context_.work_dir);
  if (llm()) {
    std::unique_ptr<ChatTransport> transport = std::move(context_.transport);
    if (!transport && definition_.gateway.kind == GatewayKind::kApi) {
      transport = MakeHttpChatTransport(definition_.gateway.endpoint,
                                        definition_.gateway.auth_token,
                                        definition_.gateway.timeout);
    }
    gateway_ = std::make_unique<LlmGateway>(definition_.gateway, context_.clock,
                                            std::move(transport));
  }
}

Session::~Session() = default;

std::unique_ptr<Session> Session::Start(SessionDefinition definition, SessionContext context) {
  std::filesystem::path path = context.transcript_path;
  std::unique_ptr<Session> s(new Session(std::move(definition), std::move(context)));
  s->transcript_ = std::make_unique<Transcript>(path);
  s->context_.store->RegisterSession({s->definition_.session_id,
                                      std::string(SessionStrategyText(s->definition_.strategy)),
                                      s->definition_.space_id, s->context_.clock->NowIso8601()});
  s->Begin();
  return s;
}

std::unique_ptr<Session> Session::Restore(SessionDefinition definition, SessionContext context,
                                          std::vector<TranscriptEvent> events) {
  std::filesystem::path path = context.transcript_path;
  std::unique_ptr<Session> s(new Session(std::move(definition), std::move(context)));
  std::deque<TranscriptEvent> inputs;
  for (const auto& e : events) {
    if (IsInput(e.type)) inputs.push_back(e);
  }
  s->transcript_ = std::make_unique<Transcript>(path, std::move(events));
  s->replaying_ = true;
  s->Begin();
  while (!inputs.empty()) {
    TranscriptEvent e = std::move(inputs.front());
    inputs.pop_front();
    const json& d = e.data;
    if (e.type == "stopped") {
      s->Stop(d.value("note", ""));
    } else if (e.type == "reply") {
      const int seq = d.at("sequence_no").get<int>();
      if (s->state_ != SessionState::kAwaitingProposal &&
          s->state_ != SessionState::kAwaitingRelay) {
        Fail(ErrorCode::kProtocol, "transcript reply #" + std::to_string(e.seq) +
                                       " arrives in state " +
                                       std::string(SessionStateText(s->state_)));
      }
      const Exchange& ex = s->gateway_->ReplayReply(seq, d.at("reply").get<std::string>(),
                                                    d.value("fulfilled_at", e.at));
      s->HandleReply(ex);
    } else if (e.type == "gateway_error") {
      s->RequireState(SessionState::kAwaitingProposal, "gateway_error");
      s->OnGatewayError(d.value("message", ""), d.value("retryable", false));
    } else if (e.type == "approval") {
      Approval a;
      a.decision = ParseApprovalDecision(d.at("decision").get<std::string>());
      a.note = d.value("note", "");
      if (d.contains("config")) a.edited_config = ConfigFromJson(d.at("config"), *s->space_);
      s->SubmitApproval(std::move(a));
    } else if (e.type == "trial") {
      s->RequireState(SessionState::kRunningTrial, "trial");
      TrialResult result = TrialResultFromJson(d, *s->space_);
      s->replay_timestamp_ = d.value("timestamp", e.at);
      s->FinishTrial(std::move(result));
    }
  }
  s->replaying_ = false;
  if (Terminal(s->state_)) s->transcript_->Close();
  return s;
}

void Session::Begin() {
  Emit("session_started", DefinitionToJson(definition_));
  if (!llm()) {
    SobolPlan plan = MakeSobolPlan(*space_, static_cast<std::size_t>(definition_.stopping.max_iterations));
    json configs = json::array();
    for (auto& c : plan.configs) {
      configs.push_back(CanonicalText(c, *space_));
      sobol_queue_.push_back(std::move(c));
    }
    Emit("plan", {{"n", plan.n}, {"skip", plan.skip}, {"configs", std::move(configs)}});
    proposal_ = sobol_queue_.front();
    SetState(SessionState::kRunningTrial);
    return;
  }
  IssuePrompt(renderer_.RenderFirst(prompt_strategy(), *space_, DefaultConfig(*space_),
                                    ReferenceDefaultMetrics(definition_.space_id),
                                    definition_.hardware_note));
}

void Session::IssuePrompt(PromptText prompt) {
  const Exchange& ex = gateway_->ReplayRequest(std::move(prompt));
  Emit("prompt", PromptJson(ex));
  const bool relay = definition_.gateway.kind == GatewayKind::kRelay;
  SetState(relay ? SessionState::kAwaitingRelay : SessionState::kAwaitingProposal);
  if (relay || replaying_) return;
  try {
    Emit("reply", ReplyJson(gateway_->CompletePending()));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kGateway) throw;
    OnGatewayError(e.what(), e.retryable());
  }
}

void Session::OnGatewayError(const std::string& message, bool retryable) {
  Emit("gateway_error", {{"message", message}, {"retryable", retryable}});
  if (!retryable) {
    Abort(message);
    return;
  }
  CountError(message);
}

bool Session::CountError(const std::string& what) {
  ++consecutive_errors_;
  if (consecutive_errors_ > definition_.error_retry_limit) {
    Abort("error retry limit " + std::to_string(definition_.error_retry_limit) +
          " exceeded: " + what);
    return true;
  }
  return false;
}

void Session::IssueError(std::string text) {
  ++error_prompts_;
  IssuePrompt(renderer_.RenderError(prompt_strategy(), text, *space_));
}

void Session::IssueError(const ValidationReport& report) {
  ++error_prompts_;
  IssuePrompt(renderer_.RenderError(prompt_strategy(), report, *space_));
}

void Session::HandleReply(const Exchange& ex) {
  ParsedProposal parsed = ParseResponse(*ex.reply, *space_);
  HistoryEntry entry;
  entry.exchange = ex.sequence_no;
  entry.proposal = parsed;
  history_.push_back(std::move(entry));

  json event = {{"sequence_no", ex.sequence_no}};
  if (parsed.parse_error || !parsed.config) {
    const std::string error = parsed.parse_error.value_or("no configuration found");
    event["parse_error"] = error;
    Emit("proposal", event);
    if (CountError(error)) return;
    IssueError("Your reply could not be read: " + error + ".");
    return;
  }
  event["values"] = ValuesJson(*parsed.config);
  ValidationReport report = Validate(*parsed.config, *space_);
  event["valid"] = report.valid;
  Emit("proposal", event);
  if (!report.valid) {
    Emit("validation_failed", {{"sequence_no", ex.sequence_no}, {"violations", report.Describe()}});
    if (CountError(report.Describe())) return;
    IssueError(report);
    return;
  }
  proposal_ = *parsed.config;
  if (definition_.ApprovalGateEnabled()) {
    SetState(SessionState::kAwaitingApproval);
  } else {
    BeginTrial(*parsed.config);
  }
}

void Session::BeginTrial(Configuration config) {
  proposal_ = std::move(config);
  SetState(SessionState::kRunningTrial);
}

void Session::SubmitApproval(Approval approval) {
  RequireState(SessionState::kAwaitingApproval, "approval");
  json event = {{"decision", ApprovalDecisionText(approval.decision)}, {"note", approval.note}};
  if (approval.decision == ApprovalDecision::kEdit) {
    if (!approval.edited_config) Fail(ErrorCode::kValidation, "edit needs a configuration");
    ValidationReport report = Validate(*approval.edited_config, *space_);
    if (!report.valid) Fail(ErrorCode::kValidation, report.Describe());
    event["config"] = ConfigToJson(*approval.edited_config, *space_);
  }
  Emit("approval", event);
  if (approval.decision == ApprovalDecision::kReject) {
    proposal_.reset();
    std::string text = "The operator rejected the proposed configuration.";
    if (!approval.note.empty()) text += " Note: " + approval.note;
    if (CountError(text)) return;
    IssueError(text);
    return;
  }
  BeginTrial(approval.decision == ApprovalDecision::kEdit ? *approval.edited_config : *proposal_);
}

void Session::FulfillRelay(int sequence_no, std::string reply) {
  RequireState(SessionState::kAwaitingRelay, "reply");
  const Exchange& ex = gateway_->FulfillRelay(sequence_no, std::move(reply));
  Emit("reply", ReplyJson(ex));
  HandleReply(ex);
}

void Session::Step() {
  switch (state_) {
    case SessionState::kAwaitingProposal: {
      if (gateway_->pending()) {
        try {
          Emit("reply", ReplyJson(gateway_->CompletePending()));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kGateway) throw;
          OnGatewayError(e.what(), e.retryable());
          return;
        }
      }
      HandleReply(gateway_->history().back());
      return;
    }
    case SessionState::kRunningTrial:
      RunNextTrial();
      return;
    default:
      Fail(ErrorCode::kProtocol, "session " + definition_.session_id + " is " +
                                     std::string(SessionStateText(state_)) +
                                     "; it waits for an operator event");
  }
}

void Session::Drive() {
  while (state_ == SessionState::kAwaitingProposal || state_ == SessionState::kRunningTrial) {
    Step();
  }
}

void Session::RunNextTrial() {
  RequireState(SessionState::kRunningTrial, "trial");
  Require(proposal_.has_value(), "no configuration queued for the trial");
  TrialResult result;
  try {
    result = context_.backend->RunTrial(*proposal_, definition_.workload);
  } catch (const Error& e) {
    result = TrialResult::Failure(*proposal_, TrialStatus::kBackendError, e.what());
  }
  FinishTrial(std::move(result));
}

void Session::FinishTrial(TrialResult result) {
  ++trial_count_;
  std::string timestamp = replaying_ ? replay_timestamp_ : context_.clock->NowIso8601();
  RunRecord record = MakeRunRecord(definition_.session_id, record_strategy(), trial_count_,
                                   result, timestamp);
  if (!replaying_) context_.store->Append(record);
  records_.push_back(record);

  json event = TrialResultToJson(result, *space_);
  event["iteration"] = trial_count_;
  event["timestamp"] = timestamp;
  Emit("trial", event);

  if (!history_.empty() && history_.back().proposal && !history_.back().trial) {
    history_.back().trial = result;
  } else {
    history_.push_back({std::nullopt, std::nullopt, result});
  }

  if (result.ok()) {
    ++ok_trials_;
    consecutive_errors_ = 0;
    ok_ept_.push_back(result.metrics->energy_per_token);
  }

  if (!llm()) {
    sobol_queue_.pop_front();
    if (sobol_queue_.empty()) {
      Complete("plan evaluated");
    } else {
      proposal_ = sobol_queue_.front();
    }
    return;
  }

  proposal_.reset();
  if (!result.ok()) {
    const std::string text = result.error_text.value_or(std::string(TrialStatusText(result.status)));
    if (CountError(text)) return;
    IssueError("The trial failed with status " + std::string(TrialStatusText(result.status)) +
               ": " + text);
    return;
  }
  const double best = *std::min_element(ok_ept_.begin(), ok_ept_.end());
  if (best <= definition_.stopping.threshold) {
    Complete("threshold reached");
  } else if (ok_trials_ >= definition_.stopping.max_iterations) {
    Complete("max iterations reached");
  } else {
    IssuePrompt(renderer_.RenderSubsequent(prompt_strategy(), *space_, result.config,
                                           *result.metrics));
  }
}

void Session::Stop(std::string note) {
  if (Terminal(state_)) {
    Fail(ErrorCode::kProtocol, "session " + definition_.session_id + " already finished");
  }
  Emit("stopped", {{"note", note}});
  Complete("operator stop");
}

void Session::Complete(std::string reason) {
  proposal_.reset();
  SetState(SessionState::kCompleted);
  Emit("completed", {{"reason", reason}, {"iteration", ok_trials_}, {"trials", trial_count_}});
  if (!replaying_) transcript_->Close();
}

void Session::Abort(std::string reason) {
  abort_reason_ = reason;
  proposal_.reset();
  SetState(SessionState::kAborted);
  Emit("aborted", {{"reason", reason}, {"iteration", ok_trials_}, {"trials", trial_count_}});
  if (!replaying_) transcript_->Close();
}

void Session::SetState(SessionState s) {
  if (state_set_ && s == state_) return;
  json event = {{"to", SessionStateText(s)}};
  if (state_set_) event["from"] = SessionStateText(state_);
  state_ = s;
  state_set_ = true;
  Emit("state", std::move(event));
}

void Session::Emit(std::string type, json data) {
  if (replaying_) return;
  transcript_->Append(std::move(type), context_.clock->NowIso8601(), std::move(data));
}

void Session::RequireState(SessionState s, std::string_view event) const {
  if (state_ != s) {
    Fail(ErrorCode::kProtocol, std::string(event) + " is not accepted in state " +
                                   std::string(SessionStateText(state_)));
  }
}

RecordStrategy Session::record_strategy() const {
  switch (definition_.strategy) {
    case SessionStrategy::kEnhanced:
      return RecordStrategy::kEnhanced;
    case SessionStrategy::kBaseline:
      return RecordStrategy::kBaseline;
    case SessionStrategy::kSobol:
      return RecordStrategy::kSobol;
  }
  return RecordStrategy::kManual;
}

PromptStrategy Session::prompt_strategy() const {
  return definition_.strategy == SessionStrategy::kBaseline ? PromptStrategy::Baseline()
                                                           : PromptStrategy::Enhanced();
}

std::optional<PromptText> Session::CurrentPrompt() const {
  if (!gateway_) return std::nullopt;
  if (const Exchange* ex = gateway_->pending()) return ex->prompt;
  return std::nullopt;
}

std::optional<int> Session::PendingSequence() const {
  if (!gateway_) return std::nullopt;
  if (const Exchange* ex = gateway_->pending()) return ex->sequence_no;
  return std::nullopt;
}

SessionSummary Session::Summary() const {
  AnalysisOptions options;
  options.threshold = definition_.stopping.threshold;
  options.threshold_image = definition_.stopping.threshold_image;
  options.max_iterations = definition_.stopping.max_iterations;
  SessionSummary s;
  s.analysis = AnalyzeSession(records_, options);
  s.state = state_;
  s.iteration = ok_trials_;
  s.trials = static_cast<int>(trial_count_);
  s.error_prompts = error_prompts_;
  s.abort_reason = abort_reason_;
  return s;
}

json Session::ToJson() const {
  json j = {{"session_id", definition_.session_id},
            {"strategy", SessionStrategyText(definition_.strategy)},
            {"space_id", definition_.space_id},
            {"backend", definition_.backend},
            {"gateway", GatewayKindText(definition_.gateway.kind)},
            {"approval_gate", definition_.ApprovalGateEnabled()},
            {"state", SessionStateText(state_)},
            {"iteration", ok_trials_},
            {"recorded_trials", trial_count_},
            {"max_iterations", definition_.stopping.max_iterations},
            {"threshold", definition_.stopping.threshold},
            {"error_prompts", error_prompts_},
            {"last_event_seq", transcript_->last_seq()}};
  if (abort_reason_) j["abort_reason"] = *abort_reason_;
  if (const Exchange* ex = gateway_ ? gateway_->pending() : nullptr) j["prompt"] = PromptJson(*ex);
  if (proposal_) {
    j["proposal"] = {{"values", ValuesJson(*proposal_)},
                     {"canonical", CanonicalText(*proposal_, *space_)}};
  }
  json points = json::array();
  double best = 0;
  for (const auto& r : records_) {
    if (!r.ok()) continue;
    best = points.empty() ? r.energy_per_token : std::min(best, r.energy_per_token);
    points.push_back({{"iteration", r.iteration},
                      {"energy_per_token", r.energy_per_token},
                      {"cumulative_min", best},
                      {"throughput", r.throughput}});
  }
  j["convergence"] = std::move(points);
  if (!Terminal(state_) && !llm()) j["sobol_remaining"] = sobol_queue_.size();
  return j;
}

}  // namespace ecotune
