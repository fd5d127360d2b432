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

#include "ecotune/param_space.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

#include "ecotune/error.h"
#include "ecotune/number_format.h"

namespace ecotune {

using nlohmann::json;

std::string_view DomainKindName(DomainKind kind) {
  switch (kind) {
    case DomainKind::kIntegerRange: return "integer-range";
    case DomainKind::kRealRange: return "real-range";
    case DomainKind::kCategorical: return "categorical";
  }
  return "unknown";
}

DomainKind ParseDomainKind(std::string_view name) {
  if (name == "integer-range") return DomainKind::kIntegerRange;
  if (name == "real-range") return DomainKind::kRealRange;
  if (name == "categorical") return DomainKind::kCategorical;
  Fail(ErrorCode::kParse, "unknown domain kind '" + std::string(name) + "'");
}

std::optional<std::int64_t> ParamDomain::Cardinality() const {
  switch (kind) {
    case DomainKind::kIntegerRange:
      return static_cast<std::int64_t>(hi - lo) + 1;
    case DomainKind::kRealRange:
      if (!step) return std::nullopt;
      return static_cast<std::int64_t>(std::llround((hi - lo) / *step)) + 1;
    case DomainKind::kCategorical:
      return static_cast<std::int64_t>(choices.size());
  }
  return std::nullopt;
}

std::string ParamDomain::DescribeRange() const {
  std::ostringstream out;
  switch (kind) {
    case DomainKind::kIntegerRange:
      out << "integer in [" << ShortestDecimal(lo) << ", " << ShortestDecimal(hi) << "]";
      break;
    case DomainKind::kRealRange:
      out << "real in [" << ShortestDecimal(lo) << ", " << ShortestDecimal(hi) << "]";
      if (step) out << " step " << ShortestDecimal(*step);
      break;
    case DomainKind::kCategorical: {
      out << "one of {";
      for (std::size_t i = 0; i < choices.size(); ++i) {
        if (i) out << ", ";
        out << choices[i];
      }
      out << "}";
      break;
    }
  }
  if (!unit.empty()) out << " " << unit;
  return out.str();
}

std::string ParamValueText(const ParamValue& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&value)) return ShortestDecimal(*d);
  return std::get<std::string>(value);
}

Configuration& Configuration::Set(const std::string& name, ParamValue value) {
  values_[name] = std::move(value);
  return *this;
}

const ParamValue& Configuration::Get(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) Fail(ErrorCode::kNotFound, "configuration has no value for '" + name + "'");
  return it->second;
}

double Configuration::Number(const std::string& name) const {
  const ParamValue& v = Get(name);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (auto parsed = ParseDouble(std::get<std::string>(v))) return *parsed;
  Fail(ErrorCode::kContractViolation, "value of '" + name + "' is not numeric");
}

const std::string& Configuration::Choice(const std::string& name) const {
  const ParamValue& v = Get(name);
  const auto* s = std::get_if<std::string>(&v);
  if (!s) Fail(ErrorCode::kContractViolation, "value of '" + name + "' is not categorical");
  return *s;
}

bool operator==(const Configuration& a, const Configuration& b) {
  return a.space_id_ == b.space_id_ && a.values_ == b.values_;
}

std::string ValidationReport::Describe() const {
  std::string out;
  for (const auto& v : violations) {
    out += v.domain + ": " + v.reason + "\n";
  }
  return out;
}

namespace {

bool OnGrid(double value, const ParamDomain& d) {
  double k = std::round((value - d.lo) / *d.step);
  return std::fabs(value - (d.lo + k * *d.step)) <= kGridTolerance;
}

std::optional<std::string> CheckValue(const ParamValue& value, const ParamDomain& d) {
  switch (d.kind) {
    case DomainKind::kIntegerRange: {
      const auto* i = std::get_if<std::int64_t>(&value);
      if (!i) return "expected an integer, got " + ParamValueText(value);
      if (*i < d.lo || *i > d.hi) {
        return "value " + std::to_string(*i) + " outside [" + ShortestDecimal(d.lo) + ", " +
               ShortestDecimal(d.hi) + "]" + (d.unit.empty() ? "" : " " + d.unit);
      }
      return std::nullopt;
    }
    case DomainKind::kRealRange: {
      double v = 0;
      if (const auto* r = std::get_if<double>(&value)) {
        v = *r;
      } else if (const auto* i = std::get_if<std::int64_t>(&value)) {
        v = static_cast<double>(*i);
      } else {
        return "expected a number, got '" + std::get<std::string>(value) + "'";
      }
      if (v < d.lo - kGridTolerance || v > d.hi + kGridTolerance) {
        return "value " + ShortestDecimal(v) + " outside [" + ShortestDecimal(d.lo) + ", " +
               ShortestDecimal(d.hi) + "]" + (d.unit.empty() ? "" : " " + d.unit);
      }
      if (d.step && !OnGrid(v, d)) {
        return "value " + ShortestDecimal(v) + " is not on the " + ShortestDecimal(*d.step) +
               " grid starting at " + ShortestDecimal(d.lo);
      }
      return std::nullopt;
    }
    case DomainKind::kCategorical: {
      const auto* s = std::get_if<std::string>(&value);
      std::string text = s ? *s : ParamValueText(value);
      if (std::find(d.choices.begin(), d.choices.end(), text) == d.choices.end()) {
        std::string allowed;
        for (const auto& c : d.choices) allowed += (allowed.empty() ? "" : ", ") + c;
        return "value '" + text + "' is not one of {" + allowed + "}";
      }
      if (!s) return "expected a categorical literal, got a number";
      return std::nullopt;
    }
  }
  return std::nullopt;
}

void CheckDomain(const ParamDomain& d) {
  Require(!d.name.empty(), "domain name must be non-empty");
  switch (d.kind) {
    case DomainKind::kIntegerRange:
      Require(d.lo <= d.hi, d.name + ": lo must be <= hi");
      Require(std::floor(d.lo) == d.lo && std::floor(d.hi) == d.hi,
              d.name + ": integer bounds must be integral");
      break;
    case DomainKind::kRealRange:
      Require(d.lo <= d.hi, d.name + ": lo must be <= hi");
      if (d.step) {
        Require(*d.step > 0, d.name + ": step must be positive");
        double k = (d.hi - d.lo) / *d.step;
        Require(std::fabs(k - std::round(k)) <= 1e-9 * std::max(1.0, k),
                d.name + ": (hi - lo) must be a multiple of step");
      }
      break;
    case DomainKind::kCategorical: {
      Require(!d.choices.empty(), d.name + ": choices must be non-empty");
      std::set<std::string> seen(d.choices.begin(), d.choices.end());
      Require(seen.size() == d.choices.size(), d.name + ": duplicate choice");
      break;
    }
  }
}

}  // namespace

ValidationReport Validate(const Configuration& config, const ParamSpace& space) {
  ValidationReport report;
  if (config.space_id() != space.space_id()) {
    report.violations.push_back(
        {"space_id", "configuration belongs to '" + config.space_id() + "', expected '" +
                         space.space_id() + "'"});
  }
  for (const auto& d : space.domains()) {
    if (!config.Has(d.name)) {
      report.violations.push_back({d.name, "missing value"});
      continue;
    }
    if (auto reason = CheckValue(config.Get(d.name), d)) {
      report.violations.push_back({d.name, *reason});
    }
  }
  for (const auto& [name, value] : config.values()) {
    if (!space.Find(name)) report.violations.push_back({name, "unknown parameter"});
  }
  report.valid = report.violations.empty();
  return report;
}

ParamSpace ParamSpace::Create(std::string space_id, std::vector<ParamDomain> domains,
                              Configuration defaults) {
  Require(!space_id.empty(), "space_id must be non-empty");
  std::set<std::string> names;
  for (const auto& d : domains) {
    CheckDomain(d);
    Require(names.insert(d.name).second, "duplicate domain name '" + d.name + "'");
  }
  ParamSpace space;
  space.space_id_ = std::move(space_id);
  space.domains_ = std::move(domains);
  space.defaults_ = std::move(defaults);
  ValidationReport report = Validate(space.defaults_, space);
  Require(report.valid, "defaults do not validate: " + report.Describe());
  return space;
}

const ParamDomain* ParamSpace::Find(std::string_view name) const {
  for (const auto& d : domains_) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

namespace {

ParamDomain IntDomain(std::string name, double lo, double hi, std::string unit,
                      std::string category, std::string description) {
  ParamDomain d;
  d.name = std::move(name);
  d.kind = DomainKind::kIntegerRange;
  d.lo = lo;
  d.hi = hi;
  d.unit = std::move(unit);
  d.category = std::move(category);
  d.description = std::move(description);
  return d;
}

ParamDomain ChoiceDomain(std::string name, std::vector<std::string> choices, std::string unit,
                         std::string category, std::string description) {
  ParamDomain d;
  d.name = std::move(name);
  d.kind = DomainKind::kCategorical;
  d.choices = std::move(choices);
  d.unit = std::move(unit);
  d.category = std::move(category);
  d.description = std::move(description);
  return d;
}

ParamSpace MakeVllmSpace() {
  std::vector<ParamDomain> domains = {
      IntDomain("max_num_batched_tokens", 256, 4096, "tokens", "token budget and context",
                "Maximum number of tokens the scheduler batches into one forward step."),
      IntDomain("max_model_len", 256, 4096, "tokens", "token budget and context",
                "Maximum context length (prompt plus generation) per sequence."),
      ChoiceDomain("block_size", {"16", "32"}, "tokens", "memory system",
                   "KV-cache block size in tokens."),
      IntDomain("max_num_sequences", 32, 256, "sequences", "concurrency",
                "Maximum number of sequences scheduled concurrently."),
      IntDomain("max_num_partial_prefills", 1, 10, "", "concurrency",
                "Maximum number of prompts prefilled in chunks at the same time."),
      IntDomain("power_limit", 100, 250, "W", "hardware",
                "GPU board power limit enforced for the run."),
  };
  Configuration defaults{std::string(kVllmSpaceId)};
  defaults.Set("max_num_batched_tokens", std::int64_t{2048})
      .Set("max_model_len", std::int64_t{4096})
      .Set("block_size", std::string("16"))
      .Set("max_num_sequences", std::int64_t{256})
      .Set("max_num_partial_prefills", std::int64_t{1})
      .Set("power_limit", std::int64_t{250});
  return ParamSpace::Create(std::string(kVllmSpaceId), std::move(domains), std::move(defaults));
}

ParamSpace MakePytorchMultimodalSpace() {
  ParamDomain fraction;
  fraction.name = "cuda_memory_fraction";
  fraction.kind = DomainKind::kRealRange;
  fraction.lo = 0.1;
  fraction.hi = 1.0;
  fraction.step = 0.1;
  fraction.category = "memory system";
  fraction.description = "Fraction of device memory the PyTorch caching allocator may use.";
  std::vector<ParamDomain> domains = {
      ChoiceDomain("pixel_precision", {"fp16", "fp32"}, "", "token budget and context",
                   "Numeric precision of the image pixel tensors."),
      fraction,
      IntDomain("batch_size", 1, 16, "images", "concurrency",
                "Number of image-text prompts processed per batch."),
      IntDomain("power_limit", 100, 250, "W", "hardware",
                "GPU board power limit enforced for the run."),
  };
  Configuration defaults{std::string(kPytorchMultimodalSpaceId)};
  defaults.Set("pixel_precision", std::string("fp16"))
      .Set("cuda_memory_fraction", 0.9)
      .Set("batch_size", std::int64_t{1})
      .Set("power_limit", std::int64_t{250});
  return ParamSpace::Create(std::string(kPytorchMultimodalSpaceId), std::move(domains),
                            std::move(defaults));
}

}  // namespace

ParamSpace BuiltinSpace(std::string_view space_id) {
  if (space_id == kVllmSpaceId) return MakeVllmSpace();
  if (space_id == kPytorchMultimodalSpaceId) return MakePytorchMultimodalSpace();
  Fail(ErrorCode::kNotFound, "unknown space '" + std::string(space_id) + "'");
}

std::vector<std::string> BuiltinSpaceIds() {
  return {std::string(kVllmSpaceId), std::string(kPytorchMultimodalSpaceId)};
}

Configuration DefaultConfig(const ParamSpace& space) { return space.defaults(); }

std::string CanonicalText(const Configuration& config, const ParamSpace& space) {
  ValidationReport report = Validate(config, space);
  Require(report.valid, "canonical_text of an invalid configuration: " + report.Describe());
  std::string out;
  for (const auto& d : space.domains()) {
    if (!out.empty()) out += ';';
    out += d.name;
    out += '=';
    out += ParamValueText(config.Get(d.name));
  }
  return out;
}

double SnapDecimal(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return std::strtod(buf, nullptr);
}

std::optional<ParamValue> CoerceValue(std::string_view text, const ParamDomain& domain) {
  std::string_view t = Trim(text);
  if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front()) {
    t = Trim(t.substr(1, t.size() - 2));
  }
  if (!domain.unit.empty() && t.size() > domain.unit.size()) {
    std::string lower = ToLower(t);
    std::string unit = ToLower(domain.unit);
    if (lower.compare(lower.size() - unit.size(), unit.size(), unit) == 0) {
      t = Trim(t.substr(0, t.size() - unit.size()));
    }
  }
  if (t.empty()) return std::nullopt;
  switch (domain.kind) {
    case DomainKind::kIntegerRange: {
      if (auto i = ParseInt(t)) return ParamValue(*i);
      if (auto d = ParseDouble(t)) {
        if (std::floor(*d) == *d && std::fabs(*d) < 9e15) {
          return ParamValue(static_cast<std::int64_t>(*d));
        }
        return ParamValue(*d);
      }
      return std::nullopt;
    }
    case DomainKind::kRealRange: {
      if (auto d = ParseDouble(t)) return ParamValue(*d);
      return std::nullopt;
    }
    case DomainKind::kCategorical: {
      for (const auto& c : domain.choices) {
        if (c == t) return ParamValue(c);
      }
      std::string lower = ToLower(t);
      for (const auto& c : domain.choices) {
        if (ToLower(c) == lower) return ParamValue(c);
      }
      // Numeric literal spellings such as "16.0" for choice "16".
      if (auto d = ParseDouble(t)) {
        for (const auto& c : domain.choices) {
          if (auto cd = ParseDouble(c); cd && *cd == *d) return ParamValue(c);
        }
      }
      return ParamValue(std::string(t));
    }
  }
  return std::nullopt;
}

Configuration ParseCanonicalText(std::string_view text, const ParamSpace& space) {
  Configuration config(space.space_id());
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(';', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view pair = text.substr(pos, end - pos);
    std::size_t eq = pair.find('=');
    if (eq == std::string_view::npos) {
      Fail(ErrorCode::kParse, "malformed canonical pair '" + std::string(pair) + "'");
    }
    std::string name(pair.substr(0, eq));
    const ParamDomain* d = space.Find(name);
    if (!d) Fail(ErrorCode::kParse, "unknown parameter '" + name + "' for " + space.space_id());
    std::string_view raw = pair.substr(eq + 1);
    std::optional<ParamValue> value;
    if (d->kind == DomainKind::kCategorical) {
      value = ParamValue(std::string(raw));
    } else {
      value = CoerceValue(raw, *d);
    }
    if (!value) Fail(ErrorCode::kParse, "unreadable value for '" + name + "'");
    if (config.Has(name)) Fail(ErrorCode::kParse, "duplicate parameter '" + name + "'");
    config.Set(name, std::move(*value));
    if (end == text.size()) break;
    pos = end + 1;
  }
  return config;
}

json SpaceToJson(const ParamSpace& space) {
  json domains = json::array();
  for (const auto& d : space.domains()) {
    json jd = {{"name", d.name}, {"kind", DomainKindName(d.kind)}};
    if (d.kind == DomainKind::kCategorical) {
      jd["choices"] = d.choices;
    } else if (d.kind == DomainKind::kIntegerRange) {
      jd["lo"] = static_cast<std::int64_t>(d.lo);
      jd["hi"] = static_cast<std::int64_t>(d.hi);
    } else {
      jd["lo"] = d.lo;
      jd["hi"] = d.hi;
      if (d.step) jd["step"] = *d.step;
    }
    jd["unit"] = d.unit;
    if (!d.category.empty()) jd["category"] = d.category;
    if (!d.description.empty()) jd["description"] = d.description;
    domains.push_back(std::move(jd));
  }
  return {{"space_id", space.space_id()},
          {"domains", std::move(domains)},
          {"defaults", ConfigValuesToJson(space.defaults(), space)}};
}

namespace {

std::string ScalarText(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number()) return ShortestDecimal(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  Fail(ErrorCode::kParse, "expected a scalar value, got " + v.dump());
}

}  // namespace

ParamSpace SpaceFromJson(const json& doc) {
  try {
    std::vector<ParamDomain> domains;
    for (const auto& jd : doc.at("domains")) {
      ParamDomain d;
      d.name = jd.at("name").get<std::string>();
      d.kind = ParseDomainKind(jd.at("kind").get<std::string>());
      if (d.kind == DomainKind::kCategorical) {
        for (const auto& c : jd.at("choices")) d.choices.push_back(ScalarText(c));
      } else {
        d.lo = jd.at("lo").get<double>();
        d.hi = jd.at("hi").get<double>();
        if (jd.contains("step") && !jd["step"].is_null()) d.step = jd["step"].get<double>();
      }
      d.unit = jd.value("unit", "");
      d.category = jd.value("category", "");
      d.description = jd.value("description", "");
      domains.push_back(std::move(d));
    }
    std::string space_id = doc.at("space_id").get<std::string>();
    Configuration defaults(space_id);
    for (const auto& d : domains) {
      if (!doc.at("defaults").contains(d.name)) continue;
      auto value = CoerceValue(ScalarText(doc["defaults"][d.name]), d);
      if (!value) Fail(ErrorCode::kParse, "unreadable default for '" + d.name + "'");
      defaults.Set(d.name, std::move(*value));
    }
    return ParamSpace::Create(std::move(space_id), std::move(domains), std::move(defaults));
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("space definition: ") + e.what());
  }
}

json ConfigValuesToJson(const Configuration& config, const ParamSpace& space) {
  json values = json::object();
  for (const auto& d : space.domains()) {
    if (!config.Has(d.name)) continue;
    const ParamValue& v = config.Get(d.name);
    if (const auto* i = std::get_if<std::int64_t>(&v)) {
      values[d.name] = *i;
    } else if (const auto* r = std::get_if<double>(&v)) {
      values[d.name] = *r;
    } else {
      values[d.name] = std::get<std::string>(v);
    }
  }
  return values;
}

json ConfigToJson(const Configuration& config, const ParamSpace& space) {
  return {{"space_id", config.space_id()}, {"values", ConfigValuesToJson(config, space)}};
}

Configuration ConfigFromJson(const json& doc, const ParamSpace& space) {
  const json& values = doc.contains("values") ? doc.at("values") : doc;
  Require(values.is_object(), "configuration document must be an object");
  Configuration config(doc.value("space_id", space.space_id()));
  for (const auto& [name, v] : values.items()) {
    const ParamDomain* d = space.Find(name);
    if (!d) Fail(ErrorCode::kParse, "unknown parameter '" + name + "'");
    auto value = CoerceValue(ScalarText(v), *d);
    if (!value) Fail(ErrorCode::kParse, "unreadable value for '" + name + "'");
    config.Set(name, std::move(*value));
  }
  return config;
}

SpaceRegistry::SpaceRegistry() {
  for (const auto& id : BuiltinSpaceIds()) {
    spaces_[id] = std::make_shared<const ParamSpace>(BuiltinSpace(id));
  }
}

void SpaceRegistry::Register(ParamSpace space) {
  std::string id = space.space_id();
  spaces_[id] = std::make_shared<const ParamSpace>(std::move(space));
}

const ParamSpace* SpaceRegistry::Find(std::string_view space_id) const {
  auto it = spaces_.find(space_id);
  return it == spaces_.end() ? nullptr : it->second.get();
}

const ParamSpace& SpaceRegistry::Get(std::string_view space_id) const {
  const ParamSpace* space = Find(space_id);
  if (!space) Fail(ErrorCode::kNotFound, "unknown space '" + std::string(space_id) + "'");
  return *space;
}

std::vector<std::string> SpaceRegistry::Ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, _] : spaces_) ids.push_back(id);
  return ids;
}

}  // namespace ecotune
