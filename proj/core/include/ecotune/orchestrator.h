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

#ifndef ECOTUNE_ORCHESTRATOR_H_
#define ECOTUNE_ORCHESTRATOR_H_

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecotune/backends.h"
#include "ecotune/clock.h"
#include "ecotune/llm_gateway.h"
#include "ecotune/metrics_store.h"
#include "ecotune/prompting.h"
#include "ecotune/report.h"
#include "ecotune/sobol.h"
#include "ecotune/transcript.h"

namespace ecotune {

enum class SessionState {
  kAwaitingProposal,
  kAwaitingRelay,
  kAwaitingApproval,
  kRunningTrial,
  kCompleted,
  kAborted,
};

std::string_view SessionStateText(SessionState s);
SessionState ParseSessionState(std::string_view text);
inline bool Terminal(SessionState s) {
  return s == SessionState::kCompleted || s == SessionState::kAborted;
}

enum class SessionStrategy { kEnhanced, kBaseline, kSobol };

std::string_view SessionStrategyText(SessionStrategy s);
SessionStrategy ParseSessionStrategy(std::string_view text);

struct StoppingRule {
  double threshold = 1.80;                // J/token
  std::optional<double> threshold_image;  // J/image, reported only
  int max_iterations = 6;
};

struct SessionDefinition {
  std::string session_id;
  SessionStrategy strategy = SessionStrategy::kEnhanced;
  std::string space_id = "vllm-v1";
  std::string backend = "sim";  // "sim" or "external"
  std::vector<std::string> runner_command;
  WorkloadSpec workload;
  GatewayMode gateway;
  StoppingRule stopping;
  std::uint64_t seed = 0;
  int error_retry_limit = 3;
  std::optional<bool> approval_gate;  // unset: on for relay/api, off for scripted
  std::string hardware_note = "NVIDIA V100 32 GB";
  std::string template_dir;

  bool ApprovalGateEnabled() const;
  // kContractViolation for inconsistent fields.
  void Check() const;
};

nlohmann::json DefinitionToJson(const SessionDefinition& d);
SessionDefinition DefinitionFromJson(const nlohmann::json& doc);

enum class ApprovalDecision { kApprove, kReject, kEdit };

std::string_view ApprovalDecisionText(ApprovalDecision d);
ApprovalDecision ParseApprovalDecision(std::string_view text);

struct Approval {
  ApprovalDecision decision = ApprovalDecision::kApprove;
  std::optional<Configuration> edited_config;  // edit only
  std::string note;
};

struct HistoryEntry {
  std::optional<int> exchange;  // sequence_no
  std::optional<ParsedProposal> proposal;
  std::optional<TrialResult> trial;
};

struct SessionSummary {
  SessionAnalysis analysis;
  SessionState state = SessionState::kAwaitingProposal;
  int iteration = 0;
  int trials = 0;
  int error_prompts = 0;
  std::optional<std::string> abort_reason;
};

nlohmann::json SummaryToJson(const SessionSummary& s, const SpaceRegistry& spaces);

// Collaborators a session borrows. The clock, store and registry must outlive
// the session.
struct SessionContext {
  const SpaceRegistry* spaces = nullptr;
  MetricsStore* store = nullptr;
  Clock* clock = nullptr;
  std::unique_ptr<Backend> backend;            // built from the definition when null
  std::unique_ptr<ChatTransport> transport;    // api mode; HTTP when null
  std::filesystem::path transcript_path;       // in-memory log when empty
  std::filesystem::path work_dir;              // external runner files
};

std::unique_ptr<Backend> MakeBackend(const SessionDefinition& d, const ParamSpace& space,
                                     const std::filesystem::path& work_dir);

// One human-in-the-loop optimization run. Not thread-safe: callers serialize
// all calls through one owner.
class Session {
 public:
  // Renders the first prompt (LLM strategies) or materializes the Sobol plan.
  static std::unique_ptr<Session> Start(SessionDefinition definition, SessionContext context);

  // Rebuilds a session from its transcript without contacting the gateway,
  // running trials or writing records. New events append after `events`.
  static std::unique_ptr<Session> Restore(SessionDefinition definition, SessionContext context,
                                          std::vector<TranscriptEvent> events);

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;
  ~Session();

  // Advances one automatic transition: fulfills a pending api/scripted
  // exchange, or runs the next trial. kProtocol in states that wait for an
  // operator event or are terminal.
  void Step();
  // Steps until the session waits for the operator or terminates.
  void Drive();

  // Operator events. kProtocol when the session is not waiting for them.
  void FulfillRelay(int sequence_no, std::string reply);
  void SubmitApproval(Approval approval);
  // Operator stop: Completed.
  void Stop(std::string note);

  // Runs the next trial (RunningTrial only).
  void RunNextTrial();

  const SessionDefinition& definition() const { return definition_; }
  const ParamSpace& space() const { return *space_; }
  SessionState state() const { return state_; }
  int iteration() const { return ok_trials_; }
  int trials() const { return static_cast<int>(trial_count_); }
  int error_prompts() const { return error_prompts_; }
  const std::optional<std::string>& abort_reason() const { return abort_reason_; }
  const std::vector<HistoryEntry>& history() const { return history_; }
  const LlmGateway* gateway() const { return gateway_.get(); }
  const Transcript& transcript() const { return *transcript_; }
  Transcript& transcript() { return *transcript_; }
  const std::vector<RunRecord>& records() const { return records_; }
  // Proposal under review (AwaitingApproval) or trial about to run.
  const std::optional<Configuration>& proposal() const { return proposal_; }
  // Prompt waiting for a reply, if any.
  std::optional<PromptText> CurrentPrompt() const;
  std::optional<int> PendingSequence() const;
  std::size_t sobol_remaining() const { return sobol_queue_.size(); }

  SessionSummary Summary() const;
  // Resource view for the service.
  nlohmann::json ToJson() const;

 private:
  Session(SessionDefinition definition, SessionContext context);

  void Begin();
  void IssuePrompt(PromptText prompt);
  void IssueError(std::string text);
  void IssueError(const ValidationReport& report);
  void OnGatewayError(const std::string& message, bool retryable);
  bool CountError(const std::string& what);
  void HandleReply(const Exchange& ex);
  void BeginTrial(Configuration config);
  void FinishTrial(TrialResult result);
  void Complete(std::string reason);
  void Abort(std::string reason);
  void SetState(SessionState s);
  void Emit(std::string type, nlohmann::json data);
  void RequireState(SessionState s, std::string_view event) const;
  RecordStrategy record_strategy() const;
  PromptStrategy prompt_strategy() const;
  bool llm() const { return definition_.strategy != SessionStrategy::kSobol; }

  SessionDefinition definition_;
  SessionContext context_;
  const ParamSpace* space_ = nullptr;
  PromptRenderer renderer_;
  std::unique_ptr<LlmGateway> gateway_;
  std::unique_ptr<Transcript> transcript_;
  SessionState state_ = SessionState::kAwaitingProposal;
  std::deque<Configuration> sobol_queue_;
  std::optional<Configuration> proposal_;
  std::vector<HistoryEntry> history_;
  std::vector<RunRecord> records_;
  std::vector<double> ok_ept_;
  std::int64_t trial_count_ = 0;
  int ok_trials_ = 0;
  int consecutive_errors_ = 0;
  int error_prompts_ = 0;
  std::optional<std::string> abort_reason_;

  bool state_set_ = false;
  bool replaying_ = false;
  std::string replay_timestamp_;
};

}  // namespace ecotune

#endif  // ECOTUNE_ORCHESTRATOR_H_
