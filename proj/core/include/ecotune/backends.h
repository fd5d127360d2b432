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

#ifndef ECOTUNE_BACKENDS_H_
#define ECOTUNE_BACKENDS_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecotune/metrics_summary.h"
#include "ecotune/param_space.h"

namespace ecotune {

enum class WorkloadKind { kText, kMultimodal };

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::kText;
  std::int64_t prompt_count = 1000;
  std::int64_t image_count = 0;        // multimodal only
  std::int64_t tokens_per_prompt = 250;  // simulation parameter

  void Check() const;
  static WorkloadSpec Text(std::int64_t prompts = 1000);
  static WorkloadSpec Multimodal(std::int64_t images = 500);
};

nlohmann::json WorkloadToJson(const WorkloadSpec& w);
WorkloadSpec WorkloadFromJson(const nlohmann::json& doc);

struct PowerSample {
  double t = 0;      // seconds since trial start
  double watts = 0;
};

// Trapezoidal energy of a power trace in joules. Needs >= 2 samples with
// strictly increasing t and non-negative watts.
double IntegratePower(std::span<const PowerSample> trace);

// NVML-style instantaneous power reading.
class PowerSampler {
 public:
  virtual ~PowerSampler() = default;
  virtual double ReadWatts(double t_since_start) = 0;
};

// Deterministic sampler driven by a function of time.
class MockPowerSampler final : public PowerSampler {
 public:
  explicit MockPowerSampler(std::function<double(double)> watts_at) : watts_at_(std::move(watts_at)) {}
  double ReadWatts(double t) override { return watts_at_(t); }

 private:
  std::function<double(double)> watts_at_;
};

// Samples at t = 0, period, 2*period, ... and always at t = duration.
std::vector<PowerSample> SamplePowerTrace(PowerSampler& sampler, double duration_s,
                                          double period_s = 0.1);

enum class TrialStatus { kOk, kOom, kBackendError };

std::string_view TrialStatusText(TrialStatus status);
TrialStatus ParseTrialStatus(std::string_view text);

struct TrialResult {
  Configuration config;
  TrialStatus status = TrialStatus::kOk;
  std::optional<MetricsSummary> metrics;  // ok only
  std::optional<std::string> error_text;  // failures only
  std::vector<PowerSample> trace;

  bool ok() const { return status == TrialStatus::kOk; }
  static TrialResult Ok(Configuration config, MetricsSummary metrics);
  static TrialResult Failure(Configuration config, TrialStatus status, std::string error);
};

// Without the power trace.
nlohmann::json TrialResultToJson(const TrialResult& r, const ParamSpace& space);
TrialResult TrialResultFromJson(const nlohmann::json& doc, const ParamSpace& space);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual const ParamSpace& space() const = 0;
  // Precondition: config validates against space().
  virtual TrialResult RunTrial(const Configuration& config, const WorkloadSpec& workload) = 0;
};

std::uint64_t Fnv1a64(std::string_view data);

struct LandscapePoint {
  double energy_per_token = 0;  // J/token
  double throughput = 0;        // tokens/s
  std::optional<double> energy_per_image;
  bool oom = false;
};

// Closed-form synthetic energy landscape for the builtin spaces. The noise
// term is a hash of canonical_text(config) and the seed, so the landscape is
// a pure function.
LandscapePoint SimLandscape(const Configuration& config, const ParamSpace& space,
                            std::uint64_t seed = 0);

struct SimulatedBackendOptions {
  std::uint64_t seed = 0;
  bool synthesize_trace = true;
  double sample_period_s = 0.1;
  double gpu_memory_utilization = 0.55;
};

class SimulatedBackend final : public Backend {
 public:
  SimulatedBackend(ParamSpace space, SimulatedBackendOptions options = {});

  std::string id() const override { return "sim"; }
  const ParamSpace& space() const override { return space_; }
  TrialResult RunTrial(const Configuration& config, const WorkloadSpec& workload) override;

 private:
  ParamSpace space_;
  SimulatedBackendOptions options_;
};

struct ExternalRunnerOptions {
  std::vector<std::string> command;  // argv prefix; --config/--workload/--out are appended
  std::filesystem::path work_dir;    // per-trial files live here
  std::chrono::milliseconds timeout{std::chrono::hours(48)};
  double gpu_memory_utilization = 0.55;
};

// Runs an experiment-runner process per trial and reads its metrics file:
// {total_energy_j, wall_time_s, total_tokens, total_images?, status,
// error_text?}.
class ExternalProcessBackend final : public Backend {
 public:
  ExternalProcessBackend(ParamSpace space, ExternalRunnerOptions options);

  std::string id() const override { return "external"; }
  const ParamSpace& space() const override { return space_; }
  TrialResult RunTrial(const Configuration& config, const WorkloadSpec& workload) override;

 private:
  ParamSpace space_;
  ExternalRunnerOptions options_;
  std::uint64_t trial_counter_ = 0;
};

// Parses a runner metrics document into a trial result (exposed for tests).
TrialResult TrialFromRunnerMetrics(const Configuration& config, const nlohmann::json& doc);

struct ProcessOutcome {
  bool timed_out = false;
  int exit_code = -1;
  int signal = 0;
};

// fork/exec with a wall-clock timeout (SIGKILL on expiry). stdout and stderr
// go to `log_path` when given.
ProcessOutcome RunProcess(const std::vector<std::string>& argv, std::chrono::milliseconds timeout,
                          const std::filesystem::path& log_path = {});

}  // namespace ecotune

#endif  // ECOTUNE_BACKENDS_H_
