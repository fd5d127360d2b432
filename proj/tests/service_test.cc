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

#include "ecotune/service.h"

#include <chrono>
#include <filesystem>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ecotune/error.h"
#include "ecotune/orchestrator.h"
#include "ecotune/prompting.h"

namespace ecotune {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kToken = "test-token";

Configuration Vllm(std::int64_t b, std::int64_t m, const char* block, std::int64_t s, std::int64_t f,
                   std::int64_t p) {
  Configuration c("vllm-v1");
  c.Set("max_num_batched_tokens", b)
      .Set("max_model_len", m)
      .Set("block_size", std::string(block))
      .Set("max_num_sequences", s)
      .Set("max_num_partial_prefills", f)
      .Set("power_limit", p);
  return c;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ecotune_service_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    StartService();
  }
  void TearDown() override {
    if (service_) service_->Shutdown();
    fs::remove_all(dir_);
  }

  void StartService() {
    ServiceConfig cfg;
    cfg.port = 0;
    cfg.data_dir = dir_;
    cfg.auth_token = kToken;
    cfg.logical_clock = true;
    service_ = std::make_unique<Service>(cfg);
    port_ = service_->Start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_default_headers({{"Authorization", std::string("Bearer ") + kToken}});
    client_->set_read_timeout(std::chrono::seconds(10));
  }

  void Restart() {
    service_->Shutdown();
    service_.reset();
    StartService();
  }

  json Get(const std::string& path, int expect = 200) {
    auto res = client_->Get(path.c_str());
    EXPECT_TRUE(res) << path;
    if (!res) return nullptr;
    EXPECT_EQ(res->status, expect) << path << ": " << res->body;
    return json::parse(res->body, nullptr, false);
  }

  json Post(const std::string& path, const json& body, int expect = 200) {
    auto res = client_->Post(path.c_str(), body.dump(), "application/json");
    EXPECT_TRUE(res) << path;
    if (!res) return nullptr;
    EXPECT_EQ(res->status, expect) << path << ": " << res->body;
    return json::parse(res->body, nullptr, false);
  }

  // Polls the session resource until `pred` holds.
  json WaitFor(const std::string& id, const std::function<bool(const json&)>& pred) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    json snap;
    while (std::chrono::steady_clock::now() < deadline) {
      snap = Get("/sessions/" + id);
      if (pred(snap)) return snap;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ADD_FAILURE() << "timed out; last snapshot " << snap.dump();
    return snap;
  }

  json WaitForState(const std::string& id, const std::string& state) {
    return WaitFor(id, [&](const json& s) { return s.value("state", "") == state; });
  }

  static std::string Reply(const Configuration& c) { return FencedReply(c, BuiltinSpace("vllm-v1")); }

  json ScriptedDefinition(const std::string& id, int bad_replies) {
    SessionDefinition d;
    d.session_id = id;
    d.gateway.kind = GatewayKind::kScripted;
    for (int i = 0; i < bad_replies; ++i) d.gateway.script.push_back(Reply(slow_));
    d.gateway.script.push_back(Reply(good_));
    d.workload = WorkloadSpec::Text(100);
    return DefinitionToJson(d);
  }

  json RelayDefinition(const std::string& id) {
    json d = ScriptedDefinition(id, 0);
    d["gateway"] = GatewayModeToJson(GatewayMode{GatewayKind::kRelay});
    d["stopping"]["threshold"] = 1.0;
    return d;
  }

  fs::path dir_;
  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
  Configuration good_ = Vllm(2048, 1024, "32", 128, 4, 160);
  Configuration slow_ = Vllm(256, 256, "16", 32, 1, 100);
};

TEST_F(ServiceTest, HealthAndAuth) {
  httplib::Client anon("127.0.0.1", port_);
  auto health = anon.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body)["version"], std::string(kServiceVersion));
  auto denied = anon.Get("/sessions");
  ASSERT_TRUE(denied);
  EXPECT_EQ(denied->status, 401);
  EXPECT_EQ(Get("/sessions")["sessions"].size(), 0u);
}

TEST_F(ServiceTest, ScriptedSessionRunsToCompletion) {
  json created = Post("/sessions", ScriptedDefinition("alpha", 2), 201);
  EXPECT_EQ(created["session_id"], "alpha");
  json done = WaitForState("alpha", "Completed");
  EXPECT_EQ(done["iteration"], 3);
  EXPECT_EQ(done["convergence"].size(), 3u);

  auto csv = client_->Get("/sessions/alpha/records.csv");
  ASSERT_TRUE(csv);
  EXPECT_EQ(csv->status, 200);
  EXPECT_EQ(csv->body.rfind("# ecotune-records v1\n", 0), 0u);

  json analysis = Get("/sessions/alpha/analysis");
  EXPECT_EQ(analysis["iterations_to_threshold"]["iterations"], 3);
  EXPECT_EQ(analysis["best"]["iteration"], 3);
  EXPECT_EQ(Get("/sessions/alpha/analysis?threshold=1.0")["iterations_to_threshold"]["censored"], true);

  EXPECT_EQ(Get("/sessions")["sessions"].size(), 1u);
}

TEST_F(ServiceTest, EventsStreamAsServerSentEvents) {
  Post("/sessions", ScriptedDefinition("ev", 0), 201);
  json done = WaitForState("ev", "Completed");
  const int last = done["last_event_seq"];
  auto all = client_->Get("/sessions/ev/events?follow=0");
  ASSERT_TRUE(all);
  EXPECT_EQ(all->get_header_value("Content-Type"), "text/event-stream");
  auto count = [](const std::string& body) {
    int n = 0;
    for (auto pos = body.find("id: "); pos != std::string::npos; pos = body.find("id: ", pos + 1)) ++n;
    return n;
  };
  EXPECT_EQ(count(all->body), last);
  EXPECT_NE(all->body.find("event: session_started"), std::string::npos);
  auto tail = client_->Get(("/sessions/ev/events?follow=0&after=" + std::to_string(last - 2)).c_str());
  EXPECT_EQ(count(tail->body), 2);
  auto resumed = client_->Get("/sessions/ev/events?follow=0",
                              {{"Last-Event-ID", std::to_string(last - 1)}});
  EXPECT_EQ(count(resumed->body), 1);
  EXPECT_NE(resumed->body.find("event: completed"), std::string::npos);
  // A finished session's follow stream ends by itself.
  auto followed = client_->Get("/sessions/ev/events");
  ASSERT_TRUE(followed);
  EXPECT_EQ(count(followed->body), last);
}

TEST_F(ServiceTest, FollowStreamDeliversLiveEvents) {
  Post("/sessions", RelayDefinition("live"), 201);
  WaitForState("live", "AwaitingRelay");
  std::string streamed;
  std::thread reader([&] {
    httplib::Client c("127.0.0.1", port_);
    c.set_default_headers({{"Authorization", std::string("Bearer ") + kToken}});
    c.set_read_timeout(std::chrono::seconds(10));
    auto res = c.Get("/sessions/live/events");
    if (res) streamed = res->body;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  Post("/sessions/live/stop", {{"note", "done"}});
  reader.join();
  EXPECT_NE(streamed.find("event: prompt"), std::string::npos);
  EXPECT_NE(streamed.find("event: stopped"), std::string::npos);
  EXPECT_NE(streamed.find("event: completed"), std::string::npos);
}

TEST_F(ServiceTest, RelayOperatorFlow) {
  Post("/sessions", RelayDefinition("relay"), 201);
  json waiting = WaitForState("relay", "AwaitingRelay");
  EXPECT_EQ(waiting["approval_gate"], true);
  auto text = client_->Get("/sessions/relay/prompt?format=text");
  ASSERT_TRUE(text);
  EXPECT_EQ(text->status, 200);
  EXPECT_NE(text->body.find("BACKGROUND"), std::string::npos);
  json prompt = Get("/sessions/relay/prompt");
  EXPECT_EQ(prompt["role"], "first");

  Configuration bad = good_;
  bad.Set("power_limit", std::int64_t{300});
  Post("/sessions/relay/reply", {{"reply", Reply(bad)}});
  EXPECT_EQ(Get("/sessions/relay/prompt")["role"], "error");
  EXPECT_EQ(Get("/sessions/relay")["error_prompts"], 1);

  Post("/sessions/relay/reply", {{"reply", Reply(good_)}});
  json review = WaitForState("relay", "AwaitingApproval");
  EXPECT_EQ(review["proposal"]["canonical"], CanonicalText(good_, BuiltinSpace("vllm-v1")));
  Get("/sessions/relay/prompt", 409);
  Post("/sessions/relay/reply", {{"reply", Reply(good_)}}, 409);

  json edit = {{"decision", "edit"}, {"config", {{"max_num_sequences", 1}}}};
  Post("/sessions/relay/approval", edit, 422);
  Post("/sessions/relay/approval", {{"decision", "approve"}});
  json next = WaitFor("relay", [](const json& s) {
    return s["state"] == "AwaitingRelay" && s["iteration"] == 1;
  });
  EXPECT_EQ(next["prompt"]["role"], "subsequent");

  Post("/sessions/relay/stop", {{"note", "enough"}});
  EXPECT_EQ(Get("/sessions/relay")["state"], "Completed");
  Post("/sessions/relay/stop", {}, 409);
}

TEST_F(ServiceTest, ErrorStatuses) {
  Get("/sessions/missing", 404);
  Get("/sessions/missing/records.csv", 404);
  auto res = client_->Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  Post("/sessions", ScriptedDefinition("dup", 0), 201);
  Post("/sessions", ScriptedDefinition("dup", 0), 409);
  Post("/sessions/dup/reply", {{"text", "x"}}, 422);
  json error = Post("/sessions/dup/reply", {{"reply", "x"}}, 409);
  EXPECT_TRUE(error.contains("error"));
}

TEST_F(ServiceTest, CompareAndReport) {
  const int a_bad[] = {0, 1, 0};
  const int b_bad[] = {2, 4, 3};
  json a = json::array(), b = json::array();
  for (int i = 0; i < 3; ++i) {
    const std::string ia = "a" + std::to_string(i), ib = "b" + std::to_string(i);
    Post("/sessions", ScriptedDefinition(ia, a_bad[i]), 201);
    Post("/sessions", ScriptedDefinition(ib, b_bad[i]), 201);
    a.push_back(ia);
    b.push_back(ib);
  }
  for (const auto& id : a) WaitForState(id, "Completed");
  for (const auto& id : b) WaitForState(id, "Completed");
  json cmp = Post("/analysis/compare", {{"a", a}, {"b", b}});
  EXPECT_EQ(cmp["iterations_a"], json({1, 2, 1}));
  EXPECT_EQ(cmp["iterations_b"], json({3, 5, 4}));
  EXPECT_EQ(cmp["df"], 2);
  EXPECT_GT(cmp["t"].get<double>(), 0);
  json report = Get("/analysis/report?sessions=a0,a1,b0");
  EXPECT_EQ(report["sessions"].size(), 3u);
  EXPECT_TRUE(report.contains("bands"));
  EXPECT_TRUE(report.contains("pareto_front"));
  Post("/analysis/compare", {{"a", a}}, 422);
}

TEST_F(ServiceTest, SessionsSurviveRestart) {
  Post("/sessions", ScriptedDefinition("keep", 1), 201);
  json done = WaitForState("keep", "Completed");
  Post("/sessions", RelayDefinition("open"), 201);
  WaitForState("open", "AwaitingRelay");
  Post("/sessions/open/reply", {{"reply", Reply(good_)}});
  json open = WaitForState("open", "AwaitingApproval");
  Restart();
  json again = Get("/sessions/keep");
  EXPECT_EQ(again["state"], "Completed");
  EXPECT_EQ(again["last_event_seq"], done["last_event_seq"]);
  EXPECT_EQ(again["convergence"], done["convergence"]);
  json reopened = Get("/sessions/open");
  EXPECT_EQ(reopened["state"], "AwaitingApproval");
  EXPECT_EQ(reopened["proposal"], open["proposal"]);
  Post("/sessions/open/approval", {{"decision", "approve"}});
  WaitFor("open", [](const json& s) { return s["iteration"] == 1; });
  auto csv = client_->Get("/sessions/open/records.csv");
  ASSERT_TRUE(csv);
  EXPECT_EQ(std::count(csv->body.begin(), csv->body.end(), '\n'), 3);
}

TEST_F(ServiceTest, BusyPortFailsToBind) {
  ServiceConfig cfg;
  cfg.port = port_;
  cfg.data_dir = dir_ / "other";
  Service second(cfg);
  try {
    second.Bind();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStartup);
  }
}

}  // namespace
}  // namespace ecotune
