// Copyright 2026 The qcascade Authors.
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


#include <random>
#include <string>
#include <vector>

#include "benchmark/benchmark.h"
#include "qcascade/cascade.h"
#include "qcascade/curves.h"
#include "qcascade/synth.h"

namespace qcascade {
namespace {

SynthConfig bench_config(std::size_t n, std::size_t stages) {
  SynthConfig c;
  c.n_questions = n;
  c.seed = 7;
  c.stages = {{"cb", 0, 0.45}, {"ob10", 10, 0.60}, {"ob20", 20, 0.75}};
  c.stages.resize(stages);
  return c;
}

CascadePolicy bench_policy(std::size_t stages) {
  CascadePolicy p;
  p.stages = {{"cb", StageKind::kClosedBook, 0, 0.5},
              {"ob10", StageKind::kOpenBook, 10, 0.5},
              {"ob20", StageKind::kOpenBook, 20, std::nullopt}};
  p.stages.resize(stages);
  p.stages.back().threshold.reset();
  p.cost = CostModel(0.0615e11, 0.202e11);
  return p;
}

void BM_Confidence(benchmark::State& state) {
  const auto method = static_cast<ConfidenceMethod>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> prob(0.01, 1.0);
  std::vector<double> v(32);
  for (double& p : v) p = prob(rng);
  for (auto _ : state) benchmark::DoNotOptimize(confidence(method, v));
  state.SetLabel(std::string(method_name(method)));
}
BENCHMARK(BM_Confidence)->DenseRange(0, 3);

void BM_RunOffline(benchmark::State& state) {
  const PredictionLog logs = generate(bench_config(static_cast<std::size_t>(state.range(0)), 3));
  const CascadePolicy policy = bench_policy(3);
  for (auto _ : state) benchmark::DoNotOptimize(run_offline(logs, policy));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunOffline)->Arg(1000)->Arg(10000);

void BM_BuildCurveK1(benchmark::State& state) {
  const PredictionLog logs = generate(bench_config(static_cast<std::size_t>(state.range(0)), 2));
  const CascadePolicy policy = bench_policy(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_curve_k1(logs, policy, ConfidenceMethod::kProductAll));
  }
}
BENCHMARK(BM_BuildCurveK1)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_SweepMulti(benchmark::State& state) {
  const PredictionLog logs = generate(bench_config(2000, 3));
  const ScoredLog scored(logs, bench_policy(3));
  const GridSpec grid{static_cast<std::size_t>(state.range(0)), 1};
  for (auto _ : state) benchmark::DoNotOptimize(sweep_multi(scored, grid));
}
BENCHMARK(BM_SweepMulti)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
  const SynthConfig config = bench_config(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(generate(config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Generate)->Arg(2000);

}  // namespace
}  // namespace qcascade

BENCHMARK_MAIN();
