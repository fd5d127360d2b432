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

#include <gtest/gtest.h>

#include "ecotune/error.h"
#include "session_fixture.h"
#include "test_util.h"

namespace ecotune {
namespace {

using testing_util::CodeOf;

class OrchestratorTest : public testing_util::SessionTest {
 protected:
  std::string Reply(const Configuration& c) { return FencedReply(c, spaces_.Get(c.space_id())); }

  SessionDefinition Scripted(std::vector<std::string> script, double threshold = 1.0,
                             int max_iterations = 6) {
    SessionDefinition d;
    d.session_id = "s1";
    d.gateway.kind = GatewayKind::kScripted;
    d.gateway.script = std::move(script);
    d.stopping.threshold = threshold;
    d.stopping.max_iterations = max_iterations;
    return d;
  }

  SessionDefinition Relay(bool gate) {
    SessionDefinition d;
    d.session_id = "r1";
    d.gateway.kind = GatewayKind::kRelay;
    d.approval_gate = gate;
    d.stopping.threshold = 1.0;
    return d;
  }

  static int CountEvents(const Session& s, const std::string& type) {
    int n = 0;
    for (const auto& e : s.transcript().Events()) n += e.type == type;
    return n;
  }

  static int CountPrompts(const Session& s, const std::string& role) {
    int n = 0;
    for (const auto& e : s.transcript().Events()) {
      if (e.type == "prompt" && e.data.at("role") == role) ++n;
    }
    return n;
  }

  Configuration good_ = Vllm(2048, 1024, "32", 128, 4, 160);
  Configuration better_ = Vllm(2048, 1024, "32", 91, 4, 160);
};

TEST_F(OrchestratorTest, ScriptedSessionRunsToMaxIterations) {
  auto s = Session::Start(Scripted({Reply(good_), Reply(better_), Reply(good_)}, 1.0, 3), Context());
  s->Drive();
  EXPECT_EQ(s->state(), SessionState::kCompleted);
  EXPECT_EQ(s->iteration(), 3);
  EXPECT_EQ(s->trials(), 3);
  EXPECT_EQ(s->error_prompts(), 0);
  auto rows = store_->LoadSession("s1");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].config, better_);
  EXPECT_EQ(rows[2].iteration, 3);
  EXPECT_EQ(CountPrompts(*s, "first"), 1);
  EXPECT_EQ(CountPrompts(*s, "subsequent"), 2);
  const auto events = s->transcript().Events();
  EXPECT_EQ(events.front().type, "session_started");
  EXPECT_EQ(events.back().type, "completed");
  EXPECT_EQ(events.back().data.at("reason"), "max iterations reached");
  EXPECT_TRUE(s->transcript().closed());
}

TEST_F(OrchestratorTest, StartIssuesFirstPromptAndStepIsProtocolChecked) {
  auto s = Session::Start(Scripted({Reply(good_)}, 1.0, 1), Context());
  EXPECT_EQ(s->state(), SessionState::kAwaitingProposal);
  EXPECT_FALSE(s->proposal().has_value());
  s->Step();
  EXPECT_EQ(s->state(), SessionState::kRunningTrial);
  ASSERT_TRUE(s->proposal().has_value());
  EXPECT_EQ(*s->proposal(), good_);
  s->Step();
  EXPECT_EQ(s->state(), SessionState::kCompleted);
  EXPECT_EQ(CodeOf([&] { s->Step(); }), ErrorCode::kProtocol);
  EXPECT_EQ(CodeOf([&] { s->Stop("late"); }), ErrorCode::kProtocol);
}

TEST_F(OrchestratorTest, ThresholdCompletesTheSession) {
  auto s = Session::Start(Scripted({Reply(good_), Reply(better_)}, 2.0, 6), Context());
  s->Drive();
  EXPECT_EQ(s->state(), SessionState::kCompleted);
  EXPECT_EQ(s->iteration(), 1);
  EXPECT_EQ(s->Summary().analysis.threshold.iterations, 1);
  EXPECT_FALSE(s->Summary().analysis.threshold.censored);
  EXPECT_EQ(s->transcript().Events().back().data.at("reason"), "threshold reached");
}

TEST_F(OrchestratorTest, OutOfRangeReplyTriggersOneErrorPrompt) {
  Configuration bad = good_;
  bad.Set("power_limit", std::int64_t{300});
  auto s = Session::Start(Scripted({Reply(bad), Reply(good_), Reply(better_)}, 1.0, 2), Context());
  s->Step();
  EXPECT_EQ(s->error_prompts(), 1);
  EXPECT_EQ(s->trials(), 0);
  ASSERT_EQ(CountPrompts(*s, "error"), 1);
  EXPECT_EQ(CountEvents(*s, "validation_failed"), 1);
  for (const auto& e : s->transcript().Events()) {
    if (e.type == "prompt" && e.data.at("role") == "error") {
      const std::string body = e.data.at("body");
      EXPECT_NE(body.find("power_limit"), std::string::npos);
      EXPECT_NE(body.find("250"), std::string::npos);
    }
  }
  s->Drive();
  EXPECT_EQ(s->state(), SessionState::kCompleted);
  EXPECT_EQ(s->iteration(), 2);
  EXPECT_EQ(s->error_prompts(), 1);
  auto rows = store_->LoadSession("s1");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].iteration, 1);
  EXPECT_EQ(rows[0].config, good_);
}

TEST_F(OrchestratorTest, UnparseableReplyIsRetried) {
  auto s = Session::Start(Scripted({"no idea", Reply(good_)}, 1.0, 1), Context());
  s->Drive();
  EXPECT_EQ(s->state(), SessionState::kCompleted);
  EXPECT_EQ(s->error_prompts(), 1);
  bool found = false;
  for (const auto& e : s->transcript().Events()) {
    if (e.type == "prompt" && e.data.at("role") == "error") {
      found = e.data.at("body").get<std::string>().find("could not be read") != std::string::npos;
    }
  }
  EXPECT_TRUE(found);
}

TEST_F(OrchestratorTest, ConsecutiveErrorsAbortPastTheRetryLimit) {
  Configuration bad = good_;
  bad.Set("power_limit", std::int64_t{300});
  SessionDefinition d = Scripted({Reply(bad), Reply(bad), Reply(bad), Reply(good_)});
  d.error_retry_limit = 2;
  auto s = Session::Start(d, Context());
  s->Drive();
  EXPECT_EQ(s->state(), SessionState::kAborted);
  ASSERT_TRUE(s->abort_reason().has_value());
  EXPECT_NE(s->abort_reason()->find("retry limit"), std::string::npos);
  EXPECT_EQ(s->error_prompts(), 2);
  EXPECT_EQ(s->trials(), 0);
}

TEST_F(OrchestratorTest, SuccessResetsTheErrorCount) {
  Configuration bad = good_;
  bad.Set("power_limit", std::int64_t{300});
  SessionDefinition d = Scripted({Reply(bad), Reply(good_), Reply(bad), Reply(better_)}, 1.0, 2);
  d.error_retry_limit = 1;
  auto s = Session::Start(d, Context());
  s->Drive();
  EXPECT_EQ(s->state(), SessionState::kCompleted);
  EXPECT_EQ(s->error_prompts(), 2);
}

TEST_F(OrchestratorTest, ExhaustedScriptAborts) {
  auto s = Session::Start(Scripted({Reply(good_)}, 1.0, 3), Context());
  s->Drive();
  EXPECT_EQ(s->state(), SessionState::kAborted);
  EXPECT_EQ(CountEvents(*s, "gateway_error"), 1);
  EXPECT_EQ(s->iteration(), 1);
}

TEST_F(OrchestratorTest, RelayWithApprovalGate) {
  auto s = Session::Start(Relay(true), Context());
  EXPECT_EQ(s->state(), SessionState::kAwaitingRelay);
  ASSERT_TRUE(s->PendingSequence().has_value());
  ASSERT_TRUE(s->CurrentPrompt().has_value());
  EXPECT_EQ(s->CurrentPrompt()->role, PromptRole::kFirst);
  EXPECT_EQ(CodeOf([&] { s->Step(); }), ErrorCode::kProtocol);
  EXPECT_EQ(CodeOf([&] { s->SubmitApproval({}); }), ErrorCode::kProtocol);
  EXPECT_EQ(CodeOf([&] { s->FulfillRelay(*s->PendingSequence() + 5, Reply(good_)); }),
            ErrorCode::kConflict);

  s->FulfillRelay(*s->PendingSequence(), Reply(good_));
  EXPECT_EQ(s->state(), SessionState::kAwaitingApproval);
  EXPECT_EQ(*s->proposal(), good_);

  s->SubmitApproval({ApprovalDecision::kReject, std::nullopt, "too aggressive"});
  EXPECT_EQ(s->state(), SessionState::kAwaitingRelay);
  EXPECT_EQ(s->error_prompts(), 1);
  ASSERT_TRUE(s->CurrentPrompt().has_value());
  EXPECT_EQ(s->CurrentPrompt()->role, PromptRole::kError);
  EXPECT_NE(s->CurrentPrompt()->body.find("too aggressive"), std::string::npos);
  EXPECT_EQ(s->trials(), 0);

  s->FulfillRelay(*s->PendingSequence(), Reply(good_));
  Configuration invalid = better_;
  invalid.Set("max_num_sequences", std::int64_t{4});
  EXPECT_EQ(CodeOf([&] { s->SubmitApproval({ApprovalDecision::kEdit, invalid, ""}); }),
            ErrorCode::kValidation);
  EXPECT_EQ(s->state(), SessionState::kAwaitingApproval);
  s->SubmitApproval({ApprovalDecision::kEdit, better_, "fewer sequences"});
  EXPECT_EQ(s->state(), SessionState::kRunningTrial);
  s->Drive();
  EXPECT_EQ(s->state(), SessionState::kAwaitingRelay);
  ASSERT_EQ(s->records().size(), 1u);
  EXPECT_EQ(s->records()[0].config, better_);
  EXPECT_EQ(s->CurrentPrompt()->role, PromptRole::kSubsequent);
  EXPECT_EQ(CountEvents(*s, "approval"), 2);

  s->Stop("enough");
  EXPECT_EQ(s->state(), SessionState::kCompleted);
}

TEST_F(OrchestratorTest, RelayWithoutGateRunsImmediately) {
  auto s = Session::Start(Relay(false), Context());
  s->FulfillRelay(*s->PendingSequence(), Reply(good_));
  EXPECT_EQ(s->state(), SessionState::kRunningTrial);
  s->RunNextTrial();
  EXPECT_EQ(s->state(), SessionState::kAwaitingRelay);
}

TEST_F(OrchestratorTest, OperatorStopCompletes) {
  auto s = Session::Start(Relay(true), Context());
  s->Stop("changed my mind");
  EXPECT_EQ(s->state(), SessionState::kCompleted);
  EXPECT_EQ(CountEvents(*s, "stopped"), 1);
  EXPECT_EQ(s->transcript().Events().back().data.at("reason"), "operator stop");
}

TEST_F(OrchestratorTest, ApprovalGateDefaults) {
  SessionDefinition d;
  d.gateway.kind = GatewayKind::kRelay;
  EXPECT_TRUE(d.ApprovalGateEnabled());
  d.gateway.kind = GatewayKind::kScripted;
  EXPECT_FALSE(d.ApprovalGateEnabled());
  d.approval_gate = true;
  EXPECT_TRUE(d.ApprovalGateEnabled());
  d.strategy = SessionStrategy::kSobol;
  EXPECT_FALSE(d.ApprovalGateEnabled());
}

TEST_F(OrchestratorTest, MultimodalOomTriggersErrorFollowUp) {
  SessionDefinition d = Scripted({Reply(Mm("fp32", 0.1, 16, 250)), Reply(Mm("fp16", 1.0, 16, 152))},
                                 0.0, 6);
  d.session_id = "mm";
  d.space_id = "pytorch-mm-v1";
  d.workload = WorkloadSpec::Multimodal(500);
  d.stopping.threshold_image = 30;
  auto s = Session::Start(d, Context());
  s->Step();
  EXPECT_EQ(s->state(), SessionState::kRunningTrial);
  s->Step();
  EXPECT_EQ(s->trials(), 1);
  EXPECT_EQ(s->iteration(), 0);
  EXPECT_EQ(s->error_prompts(), 1);
  ASSERT_EQ(CountPrompts(*s, "error"), 1);
  for (const auto& e : s->transcript().Events()) {
    if (e.type == "prompt" && e.data.at("role") == "error") {
      EXPECT_NE(e.data.at("body").get<std::string>().find("OOM"), std::string::npos);
    }
  }
  s->Step();
  s->Step();
  EXPECT_EQ(s->iteration(), 1);
  auto rows = store_->LoadSession("mm");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, TrialStatus::kOom);
  EXPECT_TRUE(rows[1].ok());
  ASSERT_TRUE(rows[1].energy_per_image.has_value());
  SessionSummary summary = s->Summary();
  ASSERT_TRUE(summary.analysis.image_threshold.has_value());
}

TEST_F(OrchestratorTest, SobolSessionEvaluatesThePlan) {
  SessionDefinition d;
  d.session_id = "sob";
  d.strategy = SessionStrategy::kSobol;
  d.stopping.max_iterations = 30;
  auto s = Session::Start(d, Context());
  EXPECT_EQ(s->state(), SessionState::kRunningTrial);
  EXPECT_EQ(s->sobol_remaining(), 30u);
  EXPECT_EQ(s->gateway(), nullptr);
  s->Drive();
  EXPECT_EQ(s->state(), SessionState::kCompleted);
  EXPECT_EQ(s->trials(), 30);
  EXPECT_EQ(s->sobol_remaining(), 0u);
  EXPECT_EQ(store_->LoadSession("sob").size(), 30u);
  EXPECT_EQ(CountEvents(*s, "prompt"), 0);
  EXPECT_EQ(s->transcript().Events().back().data.at("reason"), "plan evaluated");
}

TEST_F(OrchestratorTest, ScriptedTranscriptsAreByteIdentical) {
  auto run = [&](const std::string& id) {
    LogicalClock clock;
    SessionContext ctx = Context();
    ctx.clock = &clock;
    SessionDefinition d = Scripted({Reply(good_), Reply(better_)}, 1.0, 2);
    d.session_id = id;
    auto s = Session::Start(d, std::move(ctx));
    s->Drive();
    std::string text = s->transcript().Text();
    // Session ids differ; everything else must match.
    for (auto pos = text.find(id); pos != std::string::npos; pos = text.find(id, pos)) {
      text.replace(pos, id.size(), "ID");
    }
    return text;
  };
  EXPECT_EQ(run("a1"), run("b1"));
}

TEST_F(OrchestratorTest, RestoreReproducesTheLiveSession) {
  SessionDefinition d = Relay(true);
  auto live = Session::Start(d, Context("events.jsonl"));
  live->FulfillRelay(*live->PendingSequence(), "garbage");
  live->FulfillRelay(*live->PendingSequence(), Reply(good_));
  live->SubmitApproval({ApprovalDecision::kApprove, std::nullopt, ""});
  live->Drive();
  live->FulfillRelay(*live->PendingSequence(), Reply(better_));
  const auto events = live->transcript().Events();
  const std::size_t rows_before = store_->LoadSession("r1").size();

  auto restored = Session::Restore(d, Context(), events);
  EXPECT_EQ(store_->LoadSession("r1").size(), rows_before);
  EXPECT_EQ(restored->state(), live->state());
  EXPECT_EQ(restored->ToJson(), live->ToJson());
  EXPECT_EQ(restored->records(), live->records());
  EXPECT_EQ(restored->error_prompts(), live->error_prompts());
  EXPECT_EQ(restored->transcript().last_seq(), live->transcript().last_seq());

  live->SubmitApproval({ApprovalDecision::kApprove, std::nullopt, ""});
  restored->SubmitApproval({ApprovalDecision::kApprove, std::nullopt, ""});
  EXPECT_EQ(restored->proposal(), live->proposal());
  EXPECT_EQ(restored->transcript().last_seq(), live->transcript().last_seq());
}

TEST_F(OrchestratorTest, RestoreFromTranscriptFile) {
  SessionDefinition d = Scripted({Reply(good_), Reply(better_)}, 1.0, 2);
  auto live = Session::Start(d, Context("events.jsonl"));
  live->Drive();
  auto events = LoadTranscript(dir_ / "events.jsonl");
  ASSERT_EQ(events.size(), live->transcript().Events().size());
  auto restored = Session::Restore(d, Context(), events);
  EXPECT_EQ(restored->state(), SessionState::kCompleted);
  EXPECT_EQ(restored->Summary().analysis.best.config, live->Summary().analysis.best.config);
}

class FlakyTransport final : public ChatTransport {
 public:
  FlakyTransport(int failures, std::string reply) : failures_(failures), reply_(std::move(reply)) {}
  std::string Complete(const ChatRequest& request) override {
    ++calls;
    last_messages = request.messages.size();
    if (failures_-- > 0) throw Error(ErrorCode::kGateway, "connection refused", true);
    return reply_;
  }
  int calls = 0;
  std::size_t last_messages = 0;

 private:
  int failures_;
  std::string reply_;
};

TEST_F(OrchestratorTest, ApiRetriesRetryableGatewayErrors) {
  SessionDefinition d;
  d.session_id = "api";
  d.gateway.kind = GatewayKind::kApi;
  d.gateway.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  d.gateway.model_name = "test-model";
  d.approval_gate = false;
  d.stopping.threshold = 1.0;
  d.stopping.max_iterations = 1;
  SessionContext ctx = Context();
  auto transport = std::make_unique<FlakyTransport>(2, Reply(good_));
  FlakyTransport* raw = transport.get();
  ctx.transport = std::move(transport);
  auto s = Session::Start(d, std::move(ctx));
  EXPECT_EQ(s->state(), SessionState::kAwaitingProposal);
  s->Drive();
  EXPECT_EQ(s->state(), SessionState::kCompleted);
  EXPECT_EQ(raw->calls, 3);
  EXPECT_EQ(raw->last_messages, 1u);
  EXPECT_EQ(CountEvents(*s, "gateway_error"), 2);
}

TEST_F(OrchestratorTest, ApiAbortsWhenRetriesRunOut) {
  SessionDefinition d;
  d.session_id = "api2";
  d.gateway.kind = GatewayKind::kApi;
  d.gateway.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  d.gateway.model_name = "test-model";
  d.error_retry_limit = 1;
  SessionContext ctx = Context();
  ctx.transport = std::make_unique<FlakyTransport>(10, Reply(good_));
  auto s = Session::Start(d, std::move(ctx));
  s->Drive();
  EXPECT_EQ(s->state(), SessionState::kAborted);
}

TEST_F(OrchestratorTest, DefinitionJsonRoundTrip) {
  SessionDefinition d = Scripted({"a", "b"}, 1.7, 5);
  d.workload = WorkloadSpec::Text(10);
  d.seed = 42;
  d.approval_gate = true;
  SessionDefinition back = DefinitionFromJson(DefinitionToJson(d));
  EXPECT_EQ(DefinitionToJson(back), DefinitionToJson(d));
  EXPECT_EQ(back.gateway.script, d.gateway.script);
  EXPECT_EQ(back.seed, 42u);
}

TEST_F(OrchestratorTest, StateNamesRoundTrip) {
  for (SessionState s : {SessionState::kAwaitingProposal, SessionState::kAwaitingRelay,
                         SessionState::kAwaitingApproval, SessionState::kRunningTrial,
                         SessionState::kCompleted, SessionState::kAborted}) {
    EXPECT_EQ(ParseSessionState(SessionStateText(s)), s);
  }
  EXPECT_EQ(SessionStateText(SessionState::kAwaitingProposal), "AwaitingProposal");
}

}  // namespace
}  // namespace ecotune
