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

#ifndef ECOTUNE_TESTS_SESSION_FIXTURE_H_
#define ECOTUNE_TESTS_SESSION_FIXTURE_H_

#include <filesystem>
#include <memory>
#include <string>

#include <gtest/gtest.h>

#include "ecotune/clock.h"
#include "ecotune/metrics_store.h"
#include "ecotune/orchestrator.h"

namespace ecotune::testing_util {

// Scratch directory, registry, store and deterministic clock for sessions.
class SessionTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = std::filesystem::temp_directory_path() /
           ("ecotune_" + std::string(info->test_suite_name()) + "_" + info->name());
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
    store_ = std::make_unique<MetricsStore>(dir_ / "records", spaces_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  SessionContext Context(const std::string& transcript_name = "") {
    SessionContext ctx;
    ctx.spaces = &spaces_;
    ctx.store = store_.get();
    ctx.clock = &clock_;
    if (!transcript_name.empty()) ctx.transcript_path = dir_ / transcript_name;
    ctx.work_dir = dir_ / "work";
    return ctx;
  }

  static Configuration Vllm(std::int64_t b, std::int64_t m, const char* block, std::int64_t s,
                            std::int64_t f, std::int64_t p) {
    Configuration c("vllm-v1");
    c.Set("max_num_batched_tokens", b)
        .Set("max_model_len", m)
        .Set("block_size", std::string(block))
        .Set("max_num_sequences", s)
        .Set("max_num_partial_prefills", f)
        .Set("power_limit", p);
    return c;
  }

  static Configuration Mm(const char* precision, double fraction, std::int64_t batch,
                          std::int64_t power) {
    Configuration c("pytorch-mm-v1");
    c.Set("pixel_precision", std::string(precision))
        .Set("cuda_memory_fraction", fraction)
        .Set("batch_size", batch)
        .Set("power_limit", power);
    return c;
  }

  std::filesystem::path dir_;
  SpaceRegistry spaces_;
  std::unique_ptr<MetricsStore> store_;
  LogicalClock clock_;
};

}  // namespace ecotune::testing_util

#endif  // ECOTUNE_TESTS_SESSION_FIXTURE_H_
