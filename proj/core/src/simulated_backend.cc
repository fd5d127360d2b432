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

#include <cmath>
#include <string>

#include "ecotune/backends.h"
#include "ecotune/error.h"
#include "ecotune/number_format.h"

namespace ecotune {
namespace {

constexpr double kTwoTo64 = 18446744073709551616.0;

double UnitHash(const std::string& text) {
  return static_cast<double>(Fnv1a64(text)) / kTwoTo64;
}

double Sq(double x) { return x * x; }

struct VllmCoords {
  double u_p, u_b, u_m, u_s, u_f;
  bool block16;
};

VllmCoords VllmOf(const Configuration& c) {
  return {(c.Number("power_limit") - 100.0) / 150.0,
          std::log2(c.Number("max_num_batched_tokens") / 256.0) / 4.0,
          std::log2(c.Number("max_model_len") / 256.0) / 4.0,
          std::log2(c.Number("max_num_sequences") / 32.0) / 3.0,
          (c.Number("max_num_partial_prefills") - 1.0) / 9.0,
          c.Choice("block_size") == "16"};
}

LandscapePoint VllmLandscape(const Configuration& c, const std::string& noise_key) {
  const VllmCoords u = VllmOf(c);
  LandscapePoint p;
  const double eps = 0.04 * (UnitHash(noise_key) - 0.5);
  p.energy_per_token = 1.65 + 1.10 * Sq(u.u_p - 0.40) + 0.70 * Sq(u.u_b - 0.75) +
                       0.35 * Sq(u.u_s - 0.60) + 0.25 * Sq(u.u_m - 0.50) +
                       (u.block16 ? 0.08 : 0.0) + 0.05 * Sq(u.u_f - 0.33) + eps;
  p.throughput = 75.0 * (0.35 + 0.65 * u.u_b) * (0.55 + 0.45 * u.u_s) * (0.60 + 0.40 * u.u_p);
  p.oom = u.u_b + u.u_s + u.u_m > 2.55;
  return p;
}

LandscapePoint MultimodalLandscape(const Configuration& c, const std::string& noise_key) {
  const double u_p = (c.Number("power_limit") - 100.0) / 150.0;
  const double fraction = c.Number("cuda_memory_fraction");
  const double batch = c.Number("batch_size");
  const double u_c = (fraction - 0.1) / 0.9;
  const double u_bs = (batch - 1.0) / 15.0;
  const double w = c.Choice("pixel_precision") == "fp32" ? 1.0 : 0.0;
  LandscapePoint p;
  const double eps = 0.02 * (UnitHash(noise_key) - 0.5);
  const double eps_image = 2.0 * (UnitHash(noise_key + "#image") - 0.5);
  p.energy_per_token = 0.155 + 0.35 * Sq(u_p - 0.35) + 0.20 * Sq(1.0 - u_bs) +
                       0.10 * Sq(1.0 - u_c) + 0.25 * w + eps;
  p.energy_per_image = 24.0 + 90.0 * Sq(1.0 - u_bs) + 60.0 * Sq(u_p - 0.35) + 40.0 * w + eps_image;
  p.throughput = 120.0 * (0.25 + 0.75 * u_bs) * (0.6 + 0.4 * u_p) * (1.0 - 0.35 * w);
  p.oom = (2.0 + 0.25 * batch) * (1.0 + w) > 16.0 * fraction;
  return p;
}

class ConstantSampler final : public PowerSampler {
 public:
  explicit ConstantSampler(double watts) : watts_(watts) {}
  double ReadWatts(double) override { return watts_; }

 private:
  double watts_;
};

}  // namespace

LandscapePoint SimLandscape(const Configuration& config, const ParamSpace& space,
                            std::uint64_t seed) {
  const std::string key = CanonicalText(config, space) + std::to_string(seed);
  if (space.space_id() == kVllmSpaceId) return VllmLandscape(config, key);
  if (space.space_id() == kPytorchMultimodalSpaceId) return MultimodalLandscape(config, key);
  Fail(ErrorCode::kNotFound, "no simulated landscape for space '" + space.space_id() + "'");
}

SimulatedBackend::SimulatedBackend(ParamSpace space, SimulatedBackendOptions options)
    : space_(std::move(space)), options_(options) {
  Require(space_.space_id() == kVllmSpaceId || space_.space_id() == kPytorchMultimodalSpaceId,
          "simulated backend supports only the builtin spaces");
  Require(options_.sample_period_s > 0, "sampling period must be positive");
}

TrialResult SimulatedBackend::RunTrial(const Configuration& config, const WorkloadSpec& workload) {
  workload.Check();
  ValidationReport report = Validate(config, space_);
  Require(report.valid, "simulated trial of an invalid configuration: " + report.Describe());
  const bool multimodal = space_.space_id() == kPytorchMultimodalSpaceId;
  Require(!multimodal || workload.kind == WorkloadKind::kMultimodal,
          "pytorch-mm-v1 needs a multimodal workload");

  const LandscapePoint point = SimLandscape(config, space_, options_.seed);
  if (point.oom) {
    std::string message;
    if (multimodal) {
      const double required = (2.0 + 0.25 * config.Number("batch_size")) *
                              (config.Choice("pixel_precision") == "fp32" ? 2.0 : 1.0);
      const double budget = 16.0 * config.Number("cuda_memory_fraction");
      message = "OOM: CUDA out of memory, batch needs " + SignificantDigits(required) +
                " GB but cuda_memory_fraction allows " + SignificantDigits(budget) + " GB";
    } else {
      message = "OOM: KV cache for max_num_batched_tokens, max_num_sequences and "
                "max_model_len does not fit in gpu_memory_utilization=" +
                SignificantDigits(options_.gpu_memory_utilization);
    }
    return TrialResult::Failure(config, TrialStatus::kOom, std::move(message));
  }

  const std::int64_t tokens = multimodal ? 60 * workload.image_count
                                         : workload.tokens_per_prompt * workload.prompt_count;
  const double wall = static_cast<double>(tokens) / point.throughput;
  const double energy = point.energy_per_token * static_cast<double>(tokens);
  std::optional<std::int64_t> images;
  if (multimodal) images = workload.image_count;
  TrialResult result = TrialResult::Ok(config, DeriveMetrics(energy, wall, tokens, images));
  if (options_.synthesize_trace) {
    ConstantSampler sampler(energy / wall);
    result.trace = SamplePowerTrace(sampler, wall, options_.sample_period_s);
  }
  return result;
}

}  // namespace ecotune
