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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ecotune/param_space.h"
#include "ecotune/prompting.h"

namespace ecotune::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = Run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ecotune_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string WriteScript(const std::vector<Configuration>& configs) {
    const ParamSpace space = BuiltinSpace("vllm-v1");
    std::string text;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      if (i) text += "%%\n";
      text += FencedReply(configs[i], space) + "\n";
    }
    const auto path = dir_ / "script.txt";
    std::ofstream(path) << text;
    return path.string();
  }

  static Configuration Vllm(std::int64_t b, std::int64_t m, std::int64_t s, std::int64_t p) {
    Configuration c("vllm-v1");
    c.Set("max_num_batched_tokens", b)
        .Set("max_model_len", m)
        .Set("block_size", std::string("32"))
        .Set("max_num_sequences", s)
        .Set("max_num_partial_prefills", std::int64_t{4})
        .Set("power_limit", p);
    return c;
  }

  std::string data() const { return (dir_ / "data").string(); }

  fs::path dir_;
};

TEST(SplitScriptTest, SeparatesOnMarkerLines) {
  auto parts = SplitScript("a\nb\n%%\nc\n%%\n\n");
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0], "a\nb\n");
  EXPECT_EQ(parts[1], "c\n");
  EXPECT_TRUE(SplitScript("").empty());
}

TEST_F(CliTest, VersionAndUsageErrors) {
  EXPECT_EQ(Invoke({"--version"}).out, "0.1.0\n");
  Result none = Invoke({});
  EXPECT_EQ(none.code, 1);
  Result bad = Invoke({"space", "show", "--space", "nope"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_FALSE(bad.err.empty());
}

TEST_F(CliTest, SpaceCommands) {
  Result list = Invoke({"space", "list"});
  EXPECT_EQ(list.code, 0);
  EXPECT_NE(list.out.find("vllm-v1"), std::string::npos);
  EXPECT_NE(list.out.find("pytorch-mm-v1"), std::string::npos);
  Result exported = Invoke({"space", "export", "--space", "pytorch-mm-v1"});
  ASSERT_EQ(exported.code, 0);
  EXPECT_EQ(SpaceFromJson(json::parse(exported.out)).dimension(), 4u);
  EXPECT_NE(Invoke({"space", "show"}).out.find("power_limit"), std::string::npos);
}

TEST_F(CliTest, SobolPlanHasOneRowPerConfiguration) {
  Result r = Invoke({"sobol", "plan", "--space", "vllm-v1", "--n", "30"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 31u);
  EXPECT_EQ(lines[1], "1,2176,2176,32,144,6,175");
  EXPECT_EQ(Invoke({"sobol", "plan", "--space", "vllm-v1", "--n", "30"}).out, r.out);
}

TEST_F(CliTest, ScriptedSessionIsDeterministic) {
  const std::string script =
      WriteScript({Vllm(2048, 1024, 128, 160), Vllm(2048, 1024, 91, 170), Vllm(1024, 1024, 91, 160)});
  auto run = [&](const std::string& id) {
    Result r = Invoke({"session", "start", "--data-dir", data(), "--session-id", id, "--gateway",
                       "scripted", "--script", script, "--threshold", "1.0", "--max-iter", "3"});
    EXPECT_EQ(r.code, 0) << r.err;
    return Invoke({"session", "events", "--data-dir", data(), "--session-id", id}).out;
  };
  std::string a = run("det-a");
  std::string b = run("det-b");
  ASSERT_FALSE(a.empty());
  auto strip = [](std::string s, const std::string& id) {
    for (auto p = s.find(id); p != std::string::npos; p = s.find(id, p)) s.replace(p, id.size(), "X");
    return s;
  };
  EXPECT_EQ(strip(a, "det-a"), strip(b, "det-b"));

  json summary = json::parse(Invoke({"session", "summary", "--data-dir", data(), "--session-id", "det-a"}).out);
  EXPECT_EQ(summary["state"], "Completed");
  Result records = Invoke({"session", "records", "--data-dir", data(), "--session-id", "det-a"});
  EXPECT_EQ(std::count(records.out.begin(), records.out.end(), '\n'), 5);
}

TEST_F(CliTest, RelaySessionStepByStep) {
  Result start = Invoke({"session", "start", "--data-dir", data(), "--session-id", "rel", "--gateway",
                         "relay", "--threshold", "1.0"});
  ASSERT_EQ(start.code, 0) << start.err;
  EXPECT_EQ(json::parse(start.out)["state"], "AwaitingRelay");
  Result prompt = Invoke({"session", "prompt", "--data-dir", data(), "--session-id", "rel"});
  EXPECT_NE(prompt.out.find("BACKGROUND"), std::string::npos);

  const auto reply = dir_ / "reply.txt";
  std::ofstream(reply) << FencedReply(Vllm(2048, 1024, 128, 160), BuiltinSpace("vllm-v1"));
  Result step = Invoke({"session", "step", "--data-dir", data(), "--session-id", "rel", "--reply-file",
                        reply.string()});
  ASSERT_EQ(step.code, 0) << step.err;
  EXPECT_EQ(json::parse(step.out)["state"], "AwaitingApproval");
  Result edit = Invoke({"session", "step", "--data-dir", data(), "--session-id", "rel", "--set",
                        "power_limit=150"});
  ASSERT_EQ(edit.code, 0) << edit.err;
  json after = json::parse(edit.out);
  EXPECT_EQ(after["state"], "AwaitingRelay");
  EXPECT_EQ(after["iteration"], 1);
  Result stop = Invoke({"session", "step", "--data-dir", data(), "--session-id", "rel", "--stop"});
  EXPECT_EQ(json::parse(stop.out)["state"], "Completed");
  Result late = Invoke({"session", "step", "--data-dir", data(), "--session-id", "rel", "--approve"});
  EXPECT_EQ(late.code, 1);
}

TEST_F(CliTest, SobolRunAndAnalyze) {
  Result sob = Invoke({"sobol", "run", "--data-dir", data(), "--session-id", "sob", "--n", "8"});
  ASSERT_EQ(sob.code, 0) << sob.err;
  const std::string script = WriteScript({Vllm(256, 256, 32, 100), Vllm(2048, 1024, 128, 160)});
  for (const char* id : {"e1", "e2"}) {
    ASSERT_EQ(Invoke({"session", "start", "--data-dir", data(), "--session-id", id, "--gateway",
                      "scripted", "--script", script, "--max-iter", "2"})
                  .code,
              0);
  }
  const auto plots = dir_ / "plots";
  Result r = Invoke({"analyze", "--data-dir", data(), "--session", "e1", "--session", "e2", "--session",
                     "sob", "--plot-dir", plots.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  json report = json::parse(r.out);
  EXPECT_EQ(report["sessions"].size(), 3u);
  EXPECT_EQ(report["sessions"][0]["iterations_to_threshold"]["iterations"], 2);
  EXPECT_TRUE(fs::exists(plots / "pareto.csv"));
  EXPECT_TRUE(fs::exists(plots / "band_enhanced.csv"));
  EXPECT_EQ(Invoke({"analyze", "--data-dir", data(), "--session", "ghost"}).code, 1);
}

TEST_F(CliTest, TrialRunHonoursOverrides) {
  Result ok = Invoke({"trial", "run", "--space", "pytorch-mm-v1", "--set", "pixel_precision=fp16", "--set",
                      "cuda_memory_fraction=1.0", "--set", "power_limit=152"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(json::parse(ok.out)["status"], "ok");
  Result oom = Invoke({"trial", "run", "--space", "pytorch-mm-v1", "--set", "cuda_memory_fraction=0.1"});
  EXPECT_EQ(oom.code, 1);
  EXPECT_EQ(json::parse(oom.out)["status"], "oom");
  EXPECT_EQ(Invoke({"trial", "run", "--set", "power_limit=300"}).code, 1);
}

TEST_F(CliTest, BreakEven) {
  Result r = Invoke({"breakeven", "--prompts", "4", "--wh-per-prompt", "3", "--trial-energy", "2162832",
                     "--savings", "390401"});
  ASSERT_EQ(r.code, 0) << r.err;
  json j = json::parse(r.out);
  EXPECT_EQ(j["prompt_energy_j"], 43200.0);
  EXPECT_EQ(j["total_overhead_j"], 2206032.0);
  EXPECT_NEAR(j["break_even_workloads"].get<double>(), 5.6507, 1e-4);
  EXPECT_EQ(Invoke({"breakeven", "--trial-energy", "1", "--savings", "0"}).code, 1);
}

}  // namespace
}  // namespace ecotune::cli
