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

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "ecotune/backends.h"
#include "ecotune/error.h"

namespace ecotune {

ProcessOutcome RunProcess(const std::vector<std::string>& argv, std::chrono::milliseconds timeout,
                          const std::filesystem::path& log_path) {
  Require(!argv.empty(), "empty command");
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const pid_t pid = fork();
  if (pid < 0) Fail(ErrorCode::kStorage, std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    if (!log_path.empty()) {
      int fd = open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      if (fd >= 0) {
        dup2(fd, STDOUT_FILENO);
        dup2(fd, STDERR_FILENO);
        close(fd);
      }
    }
    execvp(args[0], args.data());
    _exit(127);
  }

  ProcessOutcome outcome;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto poll = std::chrono::milliseconds(1);
  for (;;) {
    int status = 0;
    pid_t done = waitpid(pid, &status, WNOHANG);
    if (done == pid) {
      if (WIFEXITED(status)) outcome.exit_code = WEXITSTATUS(status);
      if (WIFSIGNALED(status)) outcome.signal = WTERMSIG(status);
      return outcome;
    }
    if (done < 0 && errno != EINTR) {
      Fail(ErrorCode::kStorage, std::string("waitpid failed: ") + std::strerror(errno));
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      outcome.timed_out = true;
      outcome.signal = SIGKILL;
      return outcome;
    }
    std::this_thread::sleep_for(poll);
    poll = std::min(poll * 2, std::chrono::milliseconds(50));
  }
}

namespace {

void WriteJson(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kStorage, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
  if (!out) Fail(ErrorCode::kStorage, "write failed for " + path.string());
}

}  // namespace

TrialResult TrialFromRunnerMetrics(const Configuration& config, const nlohmann::json& doc) {
  auto contract_error = [&](const std::string& what) {
    return TrialResult::Failure(config, TrialStatus::kBackendError,
                                "runner metrics contract violated: " + what);
  };
  if (!doc.is_object()) return contract_error("metrics document is not an object");
  if (!doc.contains("status") || !doc["status"].is_string()) {
    return contract_error("missing status");
  }
  const std::string status = doc["status"].get<std::string>();
  if (status == "oom") {
    return TrialResult::Failure(config, TrialStatus::kOom,
                                doc.value("error_text", std::string("OOM")));
  }
  if (status != "ok") return contract_error("status must be ok or oom, got '" + status + "'");
  try {
    const double energy = doc.at("total_energy_j").get<double>();
    const double wall = doc.at("wall_time_s").get<double>();
    const auto tokens = doc.at("total_tokens").get<std::int64_t>();
    std::optional<std::int64_t> images;
    if (doc.contains("total_images") && !doc["total_images"].is_null()) {
      images = doc["total_images"].get<std::int64_t>();
    }
    return TrialResult::Ok(config, DeriveMetrics(energy, wall, tokens, images));
  } catch (const nlohmann::json::exception& e) {
    return contract_error(e.what());
  } catch (const Error& e) {
    return contract_error(e.what());
  }
}

ExternalProcessBackend::ExternalProcessBackend(ParamSpace space, ExternalRunnerOptions options)
    : space_(std::move(space)), options_(std::move(options)) {
  Require(!options_.command.empty(), "external backend needs a runner command");
  Require(!options_.work_dir.empty(), "external backend needs a work directory");
}

TrialResult ExternalProcessBackend::RunTrial(const Configuration& config,
                                             const WorkloadSpec& workload) {
  workload.Check();
  ValidationReport report = Validate(config, space_);
  Require(report.valid, "external trial of an invalid configuration: " + report.Describe());

  const auto dir = options_.work_dir / ("trial-" + std::to_string(++trial_counter_));
  std::filesystem::create_directories(dir);
  const auto config_path = dir / "config.json";
  const auto workload_path = dir / "workload.json";
  const auto out_path = dir / "metrics.json";
  std::filesystem::remove(out_path);

  nlohmann::json config_doc = ConfigToJson(config, space_);
  config_doc["backend_settings"] = {{"gpu_memory_utilization", options_.gpu_memory_utilization}};
  WriteJson(config_path, config_doc);
  WriteJson(workload_path, WorkloadToJson(workload));

  std::vector<std::string> argv = options_.command;
  argv.insert(argv.end(), {"--config", config_path.string(), "--workload",
                           workload_path.string(), "--out", out_path.string()});
  const ProcessOutcome outcome = RunProcess(argv, options_.timeout, dir / "runner.log");
  if (outcome.timed_out) {
    return TrialResult::Failure(config, TrialStatus::kBackendError,
                                "runner timeout after " +
                                    std::to_string(options_.timeout.count()) + " ms");
  }
  if (outcome.exit_code != 0) {
    std::string why = outcome.signal ? "killed by signal " + std::to_string(outcome.signal)
                                     : "exit code " + std::to_string(outcome.exit_code);
    return TrialResult::Failure(config, TrialStatus::kBackendError, "runner failed: " + why);
  }
  std::ifstream in(out_path, std::ios::binary);
  if (!in) {
    return TrialResult::Failure(config, TrialStatus::kBackendError,
                                "runner metrics contract violated: no metrics file written");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  auto doc = nlohmann::json::parse(buf.str(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    return TrialResult::Failure(config, TrialStatus::kBackendError,
                                "runner metrics contract violated: metrics file is not JSON");
  }
  return TrialFromRunnerMetrics(config, doc);
}

}  // namespace ecotune
