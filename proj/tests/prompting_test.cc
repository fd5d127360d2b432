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

#include "ecotune/prompting.h"

#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ecotune/error.h"

namespace ecotune {
namespace {

class PromptingTest : public ::testing::Test {
 protected:
  ParamSpace vllm_ = BuiltinSpace("vllm-v1");
  ParamSpace mm_ = BuiltinSpace("pytorch-mm-v1");
  PromptRenderer renderer_;
};

bool Contains(const std::string& haystack, std::string_view needle) {
  return haystack.find(needle) != std::string::npos;
}

TEST_F(PromptingTest, EnhancedFirstPromptCarriesBackgroundNamesAndDefaultMetric) {
  PromptText p = renderer_.RenderFirst(PromptStrategy::Enhanced(), vllm_, DefaultConfig(vllm_),
                                       ReferenceDefaultMetrics("vllm-v1"), "single 16GB GPU");
  EXPECT_EQ(p.role, PromptRole::kFirst);
  EXPECT_TRUE(p.placeholders_resolved);
  EXPECT_TRUE(Contains(p.body, "BACKGROUND"));
  EXPECT_TRUE(Contains(p.body, "single 16GB GPU"));
  EXPECT_TRUE(Contains(p.body, "3.1"));
  for (const auto& d : vllm_.domains()) EXPECT_TRUE(Contains(p.body, d.name)) << d.name;
  EXPECT_TRUE(Contains(p.body, kOutputInstruction));
}

TEST_F(PromptingTest, EnhancedPromptRepeatsTheObjective) {
  PromptText p = renderer_.RenderFirst(PromptStrategy::Enhanced(), vllm_, DefaultConfig(vllm_),
                                       ReferenceDefaultMetrics("vllm-v1"), "V100");
  const std::string objective = RenderObjective();
  const auto first = p.body.find(objective);
  ASSERT_NE(first, std::string::npos);
  EXPECT_NE(p.body.find(objective, first + objective.size()), std::string::npos);
}

TEST_F(PromptingTest, BaselineFirstPromptIsMinimal) {
  PromptText p = renderer_.RenderFirst(PromptStrategy::Baseline(), vllm_, DefaultConfig(vllm_),
                                       ReferenceDefaultMetrics("vllm-v1"), "V100");
  for (const auto& d : vllm_.domains()) EXPECT_TRUE(Contains(p.body, d.name)) << d.name;
  EXPECT_FALSE(Contains(p.body, "BACKGROUND"));
  EXPECT_FALSE(Contains(p.body, "SEARCH PROCESS"));
  EXPECT_TRUE(Contains(p.body, "3.1"));
}

TEST_F(PromptingTest, RenderingIsDeterministic) {
  auto render = [&] {
    return renderer_.RenderFirst(PromptStrategy::Enhanced(), mm_, DefaultConfig(mm_),
                                 ReferenceDefaultMetrics("pytorch-mm-v1"), "V100");
  };
  EXPECT_EQ(render(), render());
}

TEST_F(PromptingTest, SubsequentPromptReportsMeasuredMetrics) {
  MetricsSummary m;
  m.total_energy_j = 505530.0;
  m.wall_time_s = 5000;
  m.total_tokens = 300308;
  m.energy_per_token = 1.68337;
  m.throughput = 60.06;
  Configuration c = DefaultConfig(vllm_);
  PromptText enhanced = renderer_.RenderSubsequent(PromptStrategy::Enhanced(), vllm_, c, m);
  PromptText baseline = renderer_.RenderSubsequent(PromptStrategy::Baseline(), vllm_, c, m);
  EXPECT_EQ(enhanced.role, PromptRole::kSubsequent);
  EXPECT_TRUE(Contains(enhanced.body, "1.68337"));
  EXPECT_TRUE(Contains(baseline.body, "1.68337"));
  EXPECT_LT(baseline.body.size(), enhanced.body.size());
  EXPECT_FALSE(Contains(baseline.body, "SEARCH PROCESS"));
  EXPECT_TRUE(Contains(enhanced.body, CanonicalText(c, vllm_)));
}

TEST_F(PromptingTest, ImageMetricIsReportedWhenPresent) {
  MetricsSummary m;
  m.total_energy_j = 15000;
  m.wall_time_s = 100;
  m.total_tokens = 30000;
  m.energy_per_token = 0.5;
  m.throughput = 300;
  m.total_images = 500;
  m.energy_per_image = 30;
  PromptText p = renderer_.RenderSubsequent(PromptStrategy::Enhanced(), mm_, DefaultConfig(mm_), m);
  EXPECT_TRUE(Contains(p.body, "J/image"));
  m.energy_per_image.reset();
  m.total_images.reset();
  EXPECT_FALSE(Contains(RenderMetrics(m), "J/image"));
}

TEST_F(PromptingTest, ErrorPromptEchoesViolationAndFailure) {
  Configuration c = DefaultConfig(vllm_);
  c.Set("power_limit", std::int64_t{300});
  PromptText v = renderer_.RenderError(PromptStrategy::Enhanced(), Validate(c, vllm_), vllm_);
  EXPECT_EQ(v.role, PromptRole::kError);
  EXPECT_TRUE(Contains(v.body, "power_limit"));
  EXPECT_TRUE(Contains(v.body, "250"));

  for (const auto& strategy : {PromptStrategy::Enhanced(), PromptStrategy::Baseline()}) {
    PromptText oom = renderer_.RenderError(strategy, "OOM: CUDA out of memory", mm_);
    EXPECT_TRUE(Contains(oom.body, "OOM"));
    EXPECT_TRUE(Contains(oom.body, RenderObjective()));
  }
}

TEST_F(PromptingTest, EmptyErrorContentIsAContractViolation) {
  try {
    renderer_.RenderError(PromptStrategy::Enhanced(), "", vllm_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kContractViolation);
  }
}

TEST_F(PromptingTest, EnhancedTemplatesContainTheBaselineInformation) {
  for (const std::string& fragment :
       {RenderObjective(), RenderSpace(vllm_), CanonicalText(DefaultConfig(vllm_), vllm_)}) {
    PromptText e = renderer_.RenderFirst(PromptStrategy::Enhanced(), vllm_, DefaultConfig(vllm_),
                                         ReferenceDefaultMetrics("vllm-v1"), "V100");
    PromptText b = renderer_.RenderFirst(PromptStrategy::Baseline(), vllm_, DefaultConfig(vllm_),
                                         ReferenceDefaultMetrics("vllm-v1"), "V100");
    EXPECT_TRUE(Contains(e.body, fragment));
    EXPECT_TRUE(Contains(b.body, fragment));
  }
}

TEST_F(PromptingTest, TemplateOverridesAreLoadedFromDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "ecotune_templates_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "baseline_first.txt") << "Tune {SPACE} now. {OBJECTIVE}";
  PromptRenderer custom(TemplateSet::Load(dir));
  PromptText p = custom.RenderFirst(PromptStrategy::Baseline(), vllm_, DefaultConfig(vllm_),
                                    ReferenceDefaultMetrics("vllm-v1"), "V100");
  EXPECT_EQ(p.body.rfind("Tune - max_num_batched_tokens", 0), 0u);
  EXPECT_TRUE(Contains(p.body, kOutputInstruction));
  PromptText e = custom.RenderFirst(PromptStrategy::Enhanced(), vllm_, DefaultConfig(vllm_),
                                    ReferenceDefaultMetrics("vllm-v1"), "V100");
  EXPECT_TRUE(Contains(e.body, "BACKGROUND"));
  std::filesystem::remove_all(dir);
}

TEST_F(PromptingTest, UnknownPlaceholderIsReported) {
  TemplateSet t = TemplateSet::Builtin();
  t.Set(StrategyName::kBaseline, PromptRole::kFirst, "{SPACE} {SURPRISE}");
  PromptRenderer custom(t);
  PromptText p = custom.RenderFirst(PromptStrategy::Baseline(), vllm_, DefaultConfig(vllm_),
                                    ReferenceDefaultMetrics("vllm-v1"), "V100");
  EXPECT_FALSE(p.placeholders_resolved);
}

TEST_F(PromptingTest, ReplyCorpus) {
  std::ifstream in(std::string(ECOTUNE_FIXTURE_DIR) + "/replies.json");
  ASSERT_TRUE(in);
  nlohmann::json corpus = nlohmann::json::parse(in);
  ASSERT_EQ(corpus.size(), 10u);
  for (const auto& item : corpus) {
    SCOPED_TRACE(item["name"].get<std::string>());
    const ParamSpace& space = item["space"] == "vllm-v1" ? vllm_ : mm_;
    ParsedProposal p = ParseResponse(item["reply"].get<std::string>(), space);
    EXPECT_EQ(p.raw, item["reply"].get<std::string>());
    if (item.contains("expect")) {
      ASSERT_FALSE(p.parse_error.has_value()) << *p.parse_error;
      ASSERT_TRUE(p.config.has_value());
      EXPECT_EQ(CanonicalText(*p.config, space), item["expect"].get<std::string>());
    } else if (item.contains("error")) {
      ASSERT_TRUE(p.parse_error.has_value());
      EXPECT_TRUE(Contains(*p.parse_error, item["error"].get<std::string>())) << *p.parse_error;
    } else {
      ASSERT_TRUE(p.config.has_value());
      ValidationReport r = Validate(*p.config, space);
      EXPECT_FALSE(r.valid);
      EXPECT_EQ(r.violations.at(0).domain, item["invalid"].get<std::string>());
    }
  }
}

TEST_F(PromptingTest, FencedReplyRoundTrips) {
  Configuration c = DefaultConfig(mm_);
  c.Set("batch_size", std::int64_t{7});
  ParsedProposal p = ParseResponse(FencedReply(c, mm_), mm_);
  ASSERT_TRUE(p.config.has_value());
  EXPECT_EQ(*p.config, c);
}

TEST_F(PromptingTest, ReplyWithoutAnyParameterNamesEveryMissingDomain) {
  ParsedProposal p = ParseResponse("I am not sure what to try next.", mm_);
  ASSERT_TRUE(p.parse_error.has_value());
  for (const auto& d : mm_.domains()) EXPECT_TRUE(Contains(*p.parse_error, d.name));
}

}  // namespace
}  // namespace ecotune
