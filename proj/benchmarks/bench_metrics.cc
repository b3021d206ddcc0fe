// Copyright (c) 2026 The fsbsed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <benchmark/benchmark.h>

#include "fsbsed/metrics.h"

namespace {

std::vector<fsbsed::metrics::Event> RandomEvents(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> gap(0.05, 1.0);
  std::uniform_real_distribution<double> len(0.1, 0.6);
  std::vector<fsbsed::metrics::Event> out;
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    t += gap(rng);
    const double l = len(rng);
    out.push_back({t, t + l});
    t += l;
  }
  return out;
}

void BM_MatchEvents(benchmark::State& state) {
  std::mt19937 rng(4);
  const auto gt = RandomEvents(rng, static_cast<int>(state.range(0)));
  const auto pred = RandomEvents(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fsbsed::metrics::MatchEvents(pred, gt));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MatchEvents)->Range(8, 2048)->Complexity();

}  // namespace
