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

#ifndef ECOTUNE_PROMPTING_H_
#define ECOTUNE_PROMPTING_H_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "ecotune/metrics_summary.h"
#include "ecotune/param_space.h"

namespace ecotune {

enum class StrategyName { kEnhanced, kBaseline };
enum class Technique { kRepetition, kBackground, kSearchProcessGuidance, kTaskFraming };
enum class PromptRole { kFirst, kSubsequent, kError };

std::string_view StrategyNameText(StrategyName name);
std::string_view PromptRoleText(PromptRole role);
PromptRole ParsePromptRole(std::string_view text);

struct PromptStrategy {
  StrategyName name = StrategyName::kEnhanced;
  std::set<Technique> techniques;

  static PromptStrategy Enhanced();  // all four techniques
  static PromptStrategy Baseline();  // none
  bool Uses(Technique t) const { return techniques.count(t) > 0; }
};

struct PromptText {
  PromptRole role = PromptRole::kFirst;
  std::string body;
  bool placeholders_resolved = true;

  friend bool operator==(const PromptText&, const PromptText&) = default;
};

struct ParsedProposal {
  std::optional<Configuration> config;
  std::optional<std::string> parse_error;
  std::string raw;
};

inline constexpr std::string_view kTemplateVersion = "ecotune-templates-v1";
inline constexpr std::string_view kOutputInstruction =
    "Reply with exactly one fenced code block containing name: value pairs for all "
    "parameters.";

// Template texts for every (strategy, role) with named placeholders
// {OBJECTIVE} {SPACE} {PREV_CONFIG} {METRICS} {BACKGROUND} {GUIDANCE} {ERROR}.
class TemplateSet {
 public:
  static TemplateSet Builtin();
  // Reads "<strategy>_<role>.txt" (e.g. enhanced_first.txt) from `dir`; roles
  // without a file keep the builtin text.
  static TemplateSet Load(const std::filesystem::path& dir);

  const std::string& Get(StrategyName strategy, PromptRole role) const;
  void Set(StrategyName strategy, PromptRole role, std::string text);
  const std::string& version() const { return version_; }

 private:
  std::string version_;
  std::map<std::pair<StrategyName, PromptRole>, std::string> texts_;
};

// Paper-reported metrics of each builtin space's default configuration, used
// in first prompts instead of re-measuring the default.
MetricsSummary ReferenceDefaultMetrics(std::string_view space_id);

class PromptRenderer {
 public:
  explicit PromptRenderer(TemplateSet templates = TemplateSet::Builtin())
      : templates_(std::move(templates)) {}

  PromptText RenderFirst(const PromptStrategy& strategy, const ParamSpace& space,
                         const Configuration& default_config,
                         const MetricsSummary& default_metrics,
                         std::string_view hardware_note) const;
  PromptText RenderSubsequent(const PromptStrategy& strategy, const ParamSpace& space,
                              const Configuration& prev_config,
                              const MetricsSummary& prev_metrics) const;
  // `error_content` is verbatim error text: validation violations or a
  // backend failure message. Empty content is a contract violation.
  PromptText RenderError(const PromptStrategy& strategy, std::string_view error_content,
                         const ParamSpace& space) const;
  PromptText RenderError(const PromptStrategy& strategy, const ValidationReport& report,
                         const ParamSpace& space) const;

  const TemplateSet& templates() const { return templates_; }

 private:
  TemplateSet templates_;
};

// Fragments shared by both strategies; exposed so tests can check that the
// enhanced prompts carry all of the baseline information.
std::string RenderObjective();
std::string RenderSpace(const ParamSpace& space);
std::string RenderMetrics(const MetricsSummary& m);
std::string RenderBackground(const ParamSpace& space, std::string_view hardware_note);
std::string RenderGuidance();

// Extracts a proposal from a chat reply: last fenced block if any, otherwise
// "name: value" / "name = value" lines anywhere in the text.
ParsedProposal ParseResponse(std::string_view raw, const ParamSpace& space);

// A reply consisting solely of a fenced block of `config`.
std::string FencedReply(const Configuration& config, const ParamSpace& space);

}  // namespace ecotune

#endif  // ECOTUNE_PROMPTING_H_
