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
#include "ecotune/sobol.h"

namespace ecotune {
namespace {

void BM_SobolNext(benchmark::State& state) {
  SobolSequence seq(static_cast<std::size_t>(state.range(0)));
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    seq.Next(out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SobolNext)->Arg(4)->Arg(6)->Arg(21);

void BM_SobolSeek(benchmark::State& state) {
  SobolSequence seq(6);
  std::uint64_t index = 1;
  for (auto _ : state) {
    seq.Seek(index);
    index = index * 6364136223846793005ULL % 1000003;
    benchmark::DoNotOptimize(seq.raw().data());
  }
}
BENCHMARK(BM_SobolSeek);

void BM_SobolPlan(benchmark::State& state) {
  const ParamSpace space = BuiltinSpace("vllm-v1");
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    SobolPlan plan = MakeSobolPlan(space, n);
    benchmark::DoNotOptimize(plan.configs.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SobolPlan)->Arg(30)->Arg(1024);

}  // namespace
}  // namespace ecotune
