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

#include "ecotune/backends.h"

#include <cmath>

#include "ecotune/error.h"

namespace ecotune {

void WorkloadSpec::Check() const {
  Require(prompt_count >= 1, "workload needs prompt_count >= 1");
  Require(tokens_per_prompt >= 1, "workload needs tokens_per_prompt >= 1");
  if (kind == WorkloadKind::kMultimodal) {
    Require(image_count >= 1, "multimodal workload needs image_count >= 1");
  }
}

WorkloadSpec WorkloadSpec::Text(std::int64_t prompts) {
  WorkloadSpec w;
  w.kind = WorkloadKind::kText;
  w.prompt_count = prompts;
  return w;
}

WorkloadSpec WorkloadSpec::Multimodal(std::int64_t images) {
  WorkloadSpec w;
  w.kind = WorkloadKind::kMultimodal;
  w.prompt_count = images;
  w.image_count = images;
  return w;
}

nlohmann::json WorkloadToJson(const WorkloadSpec& w) {
  nlohmann::json j = {{"kind", w.kind == WorkloadKind::kText ? "text" : "multimodal"},
                      {"prompt_count", w.prompt_count},
                      {"tokens_per_prompt", w.tokens_per_prompt}};
  if (w.kind == WorkloadKind::kMultimodal) j["image_count"] = w.image_count;
  return j;
}

WorkloadSpec WorkloadFromJson(const nlohmann::json& doc) {
  WorkloadSpec w;
  std::string kind = doc.value("kind", "text");
  if (kind == "text") {
    w.kind = WorkloadKind::kText;
  } else if (kind == "multimodal") {
    w.kind = WorkloadKind::kMultimodal;
  } else {
    Fail(ErrorCode::kParse, "unknown workload kind '" + kind + "'");
  }
  w.prompt_count = doc.value("prompt_count", std::int64_t{1000});
  w.image_count = doc.value("image_count", std::int64_t{0});
  w.tokens_per_prompt = doc.value("tokens_per_prompt", std::int64_t{250});
  w.Check();
  return w;
}

double IntegratePower(std::span<const PowerSample> trace) {
  Require(trace.size() >= 2, "power integration needs at least 2 samples");
  // Neumaier-compensated trapezoid sum.
  double sum = 0;
  double compensation = 0;
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
    const PowerSample& a = trace[i];
    const PowerSample& b = trace[i + 1];
    Require(b.t > a.t, "power trace timestamps must be strictly increasing");
    Require(a.watts >= 0 && b.watts >= 0, "power samples must be non-negative");
    const double term = (b.t - a.t) * (a.watts + b.watts) / 2.0;
    const double next = sum + term;
    if (std::fabs(sum) >= std::fabs(term)) {
      compensation += (sum - next) + term;
    } else {
      compensation += (term - next) + sum;
    }
    sum = next;
  }
  return sum + compensation;
}

std::vector<PowerSample> SamplePowerTrace(PowerSampler& sampler, double duration_s,
                                          double period_s) {
  Require(duration_s > 0, "trace duration must be positive");
  Require(period_s > 0, "sampling period must be positive");
  std::vector<PowerSample> trace;
  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * period_s;
    if (t >= duration_s * (1 - 1e-12)) break;
    trace.push_back({t, sampler.ReadWatts(t)});
  }
  trace.push_back({duration_s, sampler.ReadWatts(duration_s)});
  return trace;
}

std::string_view TrialStatusText(TrialStatus status) {
  switch (status) {
    case TrialStatus::kOk: return "ok";
    case TrialStatus::kOom: return "oom";
    case TrialStatus::kBackendError: return "backend_error";
  }
  return "unknown";
}

TrialStatus ParseTrialStatus(std::string_view text) {
  if (text == "ok") return TrialStatus::kOk;
  if (text == "oom") return TrialStatus::kOom;
  if (text == "backend_error") return TrialStatus::kBackendError;
  Fail(ErrorCode::kParse, "unknown trial status '" + std::string(text) + "'");
}

TrialResult TrialResult::Ok(Configuration config, MetricsSummary metrics) {
  TrialResult r;
  r.config = std::move(config);
  r.status = TrialStatus::kOk;
  r.metrics = metrics;
  return r;
}

TrialResult TrialResult::Failure(Configuration config, TrialStatus status, std::string error) {
  Require(status != TrialStatus::kOk, "failure result needs a failure status");
  Require(!error.empty(), "failure result needs error text");
  TrialResult r;
  r.config = std::move(config);
  r.status = status;
  r.error_text = std::move(error);
  return r;
}

nlohmann::json TrialResultToJson(const TrialResult& r, const ParamSpace& space) {
  nlohmann::json j = {{"config", CanonicalText(r.config, space)},
                      {"status", TrialStatusText(r.status)}};
  if (r.metrics) j["metrics"] = MetricsToJson(*r.metrics);
  if (r.error_text) j["error_text"] = *r.error_text;
  return j;
}

TrialResult TrialResultFromJson(const nlohmann::json& doc, const ParamSpace& space) {
  Configuration config = ParseCanonicalText(doc.at("config").get<std::string>(), space);
  TrialStatus status = ParseTrialStatus(doc.at("status").get<std::string>());
  if (status == TrialStatus::kOk) {
    return TrialResult::Ok(std::move(config), MetricsFromJson(doc.at("metrics")));
  }
  return TrialResult::Failure(std::move(config), status, doc.at("error_text").get<std::string>());
}

std::uint64_t Fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ecotune
