// Copyright 2026 The ncsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// OpenMP kernels against their serial references. Run with
// OMP_NUM_THREADS=<n> to compare thread counts.

#include <benchmark/benchmark.h>

#include "ncsched/channel_sim.hpp"
#include "ncsched/coding_math.hpp"
#include "ncsched/policies.hpp"

namespace {

using namespace ncsched;

const ChannelModel kChannel = ChannelModel::homogeneous(0.3, 10);

void BM_DecodingTable(benchmark::State& state) {
  const int horizon = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(DecodingTable::build(kChannel, horizon));
}

void BM_DecodingTableSerial(benchmark::State& state) {
  const int horizon = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(DecodingTable::build_serial(kChannel, horizon));
}

void BM_MonteCarlo(benchmark::State& state) {
  const PolicyKind policy = OptimalPolicy{};
  const DecisionContext ctx = make_context(policy, kChannel, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        monte_carlo_throughput(policy, ctx, 10, 10, kChannel, state.range(0), RngSpec{1, 0}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MonteCarloSerial(benchmark::State& state) {
  const PolicyKind policy = OptimalPolicy{};
  const DecisionContext ctx = make_context(policy, kChannel, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        monte_carlo_throughput_serial(policy, ctx, 10, 10, kChannel, state.range(0), RngSpec{1, 0}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_DecodingTable)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecodingTableSerial)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarlo)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloSerial)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
