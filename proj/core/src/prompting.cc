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

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>
#include <vector>

#include "ecotune/error.h"
#include "ecotune/number_format.h"

namespace ecotune {

std::string_view StrategyNameText(StrategyName name) {
  return name == StrategyName::kEnhanced ? "enhanced" : "baseline";
}

std::string_view PromptRoleText(PromptRole role) {
  switch (role) {
    case PromptRole::kFirst: return "first";
    case PromptRole::kSubsequent: return "subsequent";
    case PromptRole::kError: return "error";
  }
  return "unknown";
}

PromptRole ParsePromptRole(std::string_view text) {
  if (text == "first") return PromptRole::kFirst;
  if (text == "subsequent") return PromptRole::kSubsequent;
  if (text == "error") return PromptRole::kError;
  Fail(ErrorCode::kParse, "unknown prompt role '" + std::string(text) + "'");
}

PromptStrategy PromptStrategy::Enhanced() {
  return {StrategyName::kEnhanced,
          {Technique::kRepetition, Technique::kBackground, Technique::kSearchProcessGuidance,
           Technique::kTaskFraming}};
}

PromptStrategy PromptStrategy::Baseline() { return {StrategyName::kBaseline, {}}; }

namespace {

constexpr const char* kEnhancedFirst = R"({OBJECTIVE}

TASK
You are tuning the runtime parameters of an LLM inference server running on a single GPU. Focus on one task only: propose the next configuration to evaluate so that energy per token goes down. Do not optimize for latency, quality or any other goal.

BACKGROUND
{BACKGROUND}

SEARCH SPACE
{SPACE}

DEFAULT CONFIGURATION
{PREV_CONFIG}

DEFAULT METRICS
{METRICS}

SEARCH PROCESS
{GUIDANCE}

{OBJECTIVE})";

constexpr const char* kBaselineFirst = R"({OBJECTIVE}

Search space:
{SPACE}

Default configuration:
{PREV_CONFIG}

Default metrics:
{METRICS}

Suggest a new configuration.)";

constexpr const char* kEnhancedSubsequent = R"({OBJECTIVE}

PREVIOUS CONFIGURATION
{PREV_CONFIG}

MEASURED METRICS
{METRICS}

SEARCH PROCESS
{GUIDANCE}

{OBJECTIVE})";

constexpr const char* kBaselineSubsequent = R"(Previous configuration:
{PREV_CONFIG}

Metrics:
{METRICS}

Suggest a new configuration.)";

constexpr const char* kEnhancedError = R"(ERROR
The previous configuration could not be evaluated:
{ERROR}

{OBJECTIVE}

SEARCH SPACE
{SPACE}

SEARCH PROCESS
{GUIDANCE}

Propose a new configuration that stays inside the search space.)";

constexpr const char* kBaselineError = R"(ERROR
{ERROR}

{OBJECTIVE}

Search space:
{SPACE}

Suggest a new configuration.)";

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kStorage, "cannot read template " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::regex& PlaceholderPattern() {
  static const std::regex pattern(R"(\{([A-Z_]+)\})");
  return pattern;
}

// Substitutes placeholders present in `values`; anything else is left in
// place and marks the prompt unresolved.
PromptText Substitute(PromptRole role, const std::string& tmpl,
                      const std::map<std::string, std::string>& values) {
  PromptText out;
  out.role = role;
  std::string body;
  auto begin = std::sregex_iterator(tmpl.begin(), tmpl.end(), PlaceholderPattern());
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    body.append(tmpl, last, static_cast<std::size_t>(m.position(0)) - last);
    auto v = values.find(m[1].str());
    if (v != values.end()) {
      body += v->second;
    } else {
      body += m[0].str();
      out.placeholders_resolved = false;
    }
    last = static_cast<std::size_t>(m.position(0) + m.length(0));
  }
  body.append(tmpl, last, std::string::npos);
  while (!body.empty() && (body.back() == '\n' || body.back() == ' ')) body.pop_back();
  body += "\n\n";
  body += kOutputInstruction;
  body += "\n";
  out.body = std::move(body);
  return out;
}

}  // namespace

TemplateSet TemplateSet::Builtin() {
  TemplateSet set;
  set.version_ = std::string(kTemplateVersion);
  set.texts_[{StrategyName::kEnhanced, PromptRole::kFirst}] = kEnhancedFirst;
  set.texts_[{StrategyName::kBaseline, PromptRole::kFirst}] = kBaselineFirst;
  set.texts_[{StrategyName::kEnhanced, PromptRole::kSubsequent}] = kEnhancedSubsequent;
  set.texts_[{StrategyName::kBaseline, PromptRole::kSubsequent}] = kBaselineSubsequent;
  set.texts_[{StrategyName::kEnhanced, PromptRole::kError}] = kEnhancedError;
  set.texts_[{StrategyName::kBaseline, PromptRole::kError}] = kBaselineError;
  return set;
}

TemplateSet TemplateSet::Load(const std::filesystem::path& dir) {
  TemplateSet set = Builtin();
  bool any = false;
  for (StrategyName s : {StrategyName::kEnhanced, StrategyName::kBaseline}) {
    for (PromptRole r : {PromptRole::kFirst, PromptRole::kSubsequent, PromptRole::kError}) {
      auto path = dir / (std::string(StrategyNameText(s)) + "_" +
                         std::string(PromptRoleText(r)) + ".txt");
      if (std::filesystem::exists(path)) {
        set.texts_[{s, r}] = ReadFile(path);
        any = true;
      }
    }
  }
  if (any) set.version_ = "custom:" + dir.string();
  return set;
}

const std::string& TemplateSet::Get(StrategyName strategy, PromptRole role) const {
  return texts_.at({strategy, role});
}

void TemplateSet::Set(StrategyName strategy, PromptRole role, std::string text) {
  texts_[{strategy, role}] = std::move(text);
  version_ = "custom";
}

MetricsSummary ReferenceDefaultMetrics(std::string_view space_id) {
  if (space_id == kVllmSpaceId) {
    constexpr std::int64_t kTokens = 300308;
    return DeriveMetrics(3.1 * kTokens, kTokens / 33.5, kTokens);
  }
  if (space_id == kPytorchMultimodalSpaceId) {
    return DeriveMetrics(228.9 * 500, 1800.0, 52986, 500);
  }
  Fail(ErrorCode::kNotFound, "no reference metrics for space '" + std::string(space_id) + "'");
}

std::string RenderObjective() {
  return "OBJECTIVE: minimize energy per token (J/token) of the inference workload.";
}

std::string RenderSpace(const ParamSpace& space) {
  std::string out;
  for (const auto& d : space.domains()) {
    if (!out.empty()) out += "\n";
    out += "- " + d.name + ": " + d.DescribeRange();
  }
  return out;
}

std::string RenderMetrics(const MetricsSummary& m) {
  std::string out;
  out += "total_energy_j: " + SignificantDigits(m.total_energy_j) + " J\n";
  out += "wall_time_s: " + SignificantDigits(m.wall_time_s) + " s\n";
  out += "total_tokens: " + std::to_string(m.total_tokens) + "\n";
  out += "energy_per_token: " + SignificantDigits(m.energy_per_token) + " J/token\n";
  out += "throughput: " + SignificantDigits(m.throughput) + " tokens/s";
  if (m.total_images) out += "\ntotal_images: " + std::to_string(*m.total_images);
  if (m.energy_per_image) {
    out += "\nenergy_per_image: " + SignificantDigits(*m.energy_per_image) + " J/image";
  }
  return out;
}

std::string RenderBackground(const ParamSpace& space, std::string_view hardware_note) {
  std::string out = "Hardware: " + std::string(hardware_note) + "\nParameters:";
  for (const auto& d : space.domains()) {
    out += "\n- " + d.name + ": " + (d.description.empty() ? d.DescribeRange() : d.description);
  }
  return out;
}

std::string RenderGuidance() {
  return "- Change only one or two parameters per step and keep the rest of the best "
         "configuration so far.\n"
         "- Stay inside the ranges of the search space; every parameter must be present.\n"
         "- If the last change increased energy per token, revert it and try a different "
         "parameter.";
}

PromptText PromptRenderer::RenderFirst(const PromptStrategy& strategy, const ParamSpace& space,
                                       const Configuration& default_config,
                                       const MetricsSummary& default_metrics,
                                       std::string_view hardware_note) const {
  Require(MetricsConsistent(default_metrics), "default metrics violate their invariants");
  std::map<std::string, std::string> values = {
      {"OBJECTIVE", RenderObjective()},
      {"SPACE", RenderSpace(space)},
      {"PREV_CONFIG", CanonicalText(default_config, space)},
      {"METRICS", RenderMetrics(default_metrics)},
  };
  if (strategy.Uses(Technique::kBackground)) {
    values["BACKGROUND"] = RenderBackground(space, hardware_note);
  }
  if (strategy.Uses(Technique::kSearchProcessGuidance)) values["GUIDANCE"] = RenderGuidance();
  return Substitute(PromptRole::kFirst, templates_.Get(strategy.name, PromptRole::kFirst),
                    values);
}

PromptText PromptRenderer::RenderSubsequent(const PromptStrategy& strategy,
                                            const ParamSpace& space,
                                            const Configuration& prev_config,
                                            const MetricsSummary& prev_metrics) const {
  std::map<std::string, std::string> values = {
      {"OBJECTIVE", RenderObjective()},
      {"SPACE", RenderSpace(space)},
      {"PREV_CONFIG", CanonicalText(prev_config, space)},
      {"METRICS", RenderMetrics(prev_metrics)},
  };
  if (strategy.Uses(Technique::kSearchProcessGuidance)) values["GUIDANCE"] = RenderGuidance();
  return Substitute(PromptRole::kSubsequent,
                    templates_.Get(strategy.name, PromptRole::kSubsequent), values);
}

PromptText PromptRenderer::RenderError(const PromptStrategy& strategy,
                                       std::string_view error_content,
                                       const ParamSpace& space) const {
  std::string error(Trim(error_content));
  Require(!error.empty(), "error prompt needs non-empty error content");
  std::map<std::string, std::string> values = {
      {"OBJECTIVE", RenderObjective()},
      {"SPACE", RenderSpace(space)},
      {"ERROR", error},
  };
  if (strategy.Uses(Technique::kSearchProcessGuidance)) values["GUIDANCE"] = RenderGuidance();
  return Substitute(PromptRole::kError, templates_.Get(strategy.name, PromptRole::kError),
                    values);
}

PromptText PromptRenderer::RenderError(const PromptStrategy& strategy,
                                       const ValidationReport& report,
                                       const ParamSpace& space) const {
  return RenderError(strategy, report.Describe(), space);
}

namespace {

std::string NormalizeName(std::string_view name) {
  std::string out = ToLower(Trim(name));
  for (char& c : out) {
    if (c == '-' || c == ' ') c = '_';
  }
  while (!out.empty() && out.front() == '_') out.erase(out.begin());
  return out;
}

struct Block {
  std::string content;
};

std::vector<Block> FencedBlocks(std::string_view text) {
  std::vector<Block> blocks;
  std::istringstream in{std::string(text)};
  std::string line;
  bool inside = false;
  std::string current;
  while (std::getline(in, line)) {
    std::string_view t = Trim(line);
    if (t.substr(0, 3) == "```" || t.substr(0, 3) == "~~~") {
      if (inside) {
        blocks.push_back({current});
        current.clear();
        inside = false;
      } else {
        inside = true;
      }
      continue;
    }
    if (inside) current += line + "\n";
  }
  if (inside && !current.empty()) blocks.push_back({current});
  return blocks;
}

// name -> raw value text, last occurrence wins.
using RawPairs = std::map<std::string, std::string>;

void ScanLines(std::string_view text, const ParamSpace& space, RawPairs& out) {
  static const std::regex line_pattern(
      R"(^\s*(?:[-*+>]\s+|\d+[.)]\s+)?[`"'*]*(--)?([A-Za-z][A-Za-z0-9_\- ]*?)[`"'*]*\s*(?:[:=]|\s(?=[-+0-9]))\s*(.+?)\s*$)");
  std::map<std::string, std::string> by_normalized;
  for (const auto& d : space.domains()) by_normalized[NormalizeName(d.name)] = d.name;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, line_pattern)) continue;
    auto name = by_normalized.find(NormalizeName(m[2].str()));
    if (name == by_normalized.end()) continue;
    std::string value = m[3].str();
    if (auto hash = value.find(" #"); hash != std::string::npos) value.resize(hash);
    if (auto paren = value.find(" ("); paren != std::string::npos) value.resize(paren);
    std::string_view v = Trim(value);
    while (!v.empty() && (v.back() == ',' || v.back() == ';' || v.back() == '*' ||
                          v.back() == '`' || v.back() == '.')) {
      // A trailing period is only punctuation when it does not belong to a number.
      if (v.back() == '.' && v.size() >= 2 && std::isdigit(static_cast<unsigned char>(v[v.size() - 2])) &&
          v.find('.') != v.size() - 1) {
        break;
      }
      v.remove_suffix(1);
    }
    while (!v.empty() && (v.front() == '`' || v.front() == '*')) v.remove_prefix(1);
    out[name->second] = std::string(Trim(v));
  }
}

bool ScanJson(const std::string& content, const ParamSpace& space, RawPairs& out) {
  std::string_view t = Trim(content);
  if (t.empty() || t.front() != '{') return false;
  nlohmann::json doc = nlohmann::json::parse(t, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) return false;
  if (doc.contains("values") && doc["values"].is_object()) doc = doc["values"];
  std::map<std::string, std::string> by_normalized;
  for (const auto& d : space.domains()) by_normalized[NormalizeName(d.name)] = d.name;
  for (const auto& [key, value] : doc.items()) {
    auto name = by_normalized.find(NormalizeName(key));
    if (name == by_normalized.end()) continue;
    if (value.is_string()) {
      out[name->second] = value.get<std::string>();
    } else if (value.is_number_integer()) {
      out[name->second] = std::to_string(value.get<std::int64_t>());
    } else if (value.is_number()) {
      out[name->second] = ShortestDecimal(value.get<double>());
    } else {
      out[name->second] = value.dump();
    }
  }
  return true;
}

std::string StripThousands(std::string value) {
  static const std::regex grouped(R"(^\d{1,3}(,\d{3})+(\.\d+)?$)");
  if (std::regex_match(value, grouped)) {
    value.erase(std::remove(value.begin(), value.end(), ','), value.end());
  }
  return value;
}

}  // namespace

ParsedProposal ParseResponse(std::string_view raw, const ParamSpace& space) {
  ParsedProposal proposal;
  proposal.raw = std::string(raw);
  RawPairs pairs;
  std::vector<Block> blocks = FencedBlocks(raw);
  if (!blocks.empty()) {
    const std::string& content = blocks.back().content;
    if (!ScanJson(content, space, pairs)) ScanLines(content, space, pairs);
  } else {
    ScanLines(raw, space, pairs);
  }

  std::vector<std::string> missing;
  std::vector<std::string> unreadable;
  Configuration config(space.space_id());
  for (const auto& d : space.domains()) {
    auto it = pairs.find(d.name);
    if (it == pairs.end()) {
      missing.push_back(d.name);
      continue;
    }
    auto value = CoerceValue(StripThousands(it->second), d);
    if (!value) {
      unreadable.push_back(d.name + " ('" + it->second + "')");
      continue;
    }
    config.Set(d.name, std::move(*value));
  }
  if (missing.empty() && unreadable.empty()) {
    proposal.config = std::move(config);
    return proposal;
  }
  std::string error;
  if (!missing.empty()) {
    error = "missing parameters:";
    for (const auto& m : missing) error += " " + m;
  }
  if (!unreadable.empty()) {
    if (!error.empty()) error += "; ";
    error += "unreadable values:";
    for (const auto& u : unreadable) error += " " + u;
  }
  proposal.parse_error = std::move(error);
  return proposal;
}

std::string FencedReply(const Configuration& config, const ParamSpace& space) {
  std::string out = "```\n";
  for (const auto& d : space.domains()) {
    out += d.name + ": " + ParamValueText(config.Get(d.name)) + "\n";
  }
  out += "```\n";
  return out;
}

}  // namespace ecotune
