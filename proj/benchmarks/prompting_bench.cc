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

#include <benchmark/benchmark.h>

#include "ecotune/param_space.h"
#include "ecotune/prompting.h"

namespace ecotune {
namespace {

void BM_RenderFirstPrompt(benchmark::State& state) {
  const ParamSpace space = BuiltinSpace("vllm-v1");
  const PromptRenderer renderer;
  const PromptStrategy strategy = state.range(0) ? PromptStrategy::Enhanced() : PromptStrategy::Baseline();
  const Configuration defaults = DefaultConfig(space);
  const MetricsSummary metrics = ReferenceDefaultMetrics("vllm-v1");
  for (auto _ : state) {
    benchmark::DoNotOptimize(renderer.RenderFirst(strategy, space, defaults, metrics, "NVIDIA V100 32 GB"));
  }
}
BENCHMARK(BM_RenderFirstPrompt)->Arg(0)->Arg(1);

void BM_ParseResponse(benchmark::State& state) {
  const ParamSpace space = BuiltinSpace("vllm-v1");
  const std::string reply = "Based on the measurements I suggest a smaller context.\n\n" +
                            FencedReply(DefaultConfig(space), space) + "\nThis should lower energy use.";
  for (auto _ : state) benchmark::DoNotOptimize(ParseResponse(reply, space));
}
BENCHMARK(BM_ParseResponse);

void BM_CanonicalRoundTrip(benchmark::State& state) {
  const ParamSpace space = BuiltinSpace("pytorch-mm-v1");
  const Configuration c = DefaultConfig(space);
  for (auto _ : state) benchmark::DoNotOptimize(ParseCanonicalText(CanonicalText(c, space), space));
}
BENCHMARK(BM_CanonicalRoundTrip);

}  // namespace
}  // namespace ecotune
