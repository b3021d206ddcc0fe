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

#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "fsbsed/audio.h"
#include "fsbsed/features.h"

namespace {

fsbsed::audio::AudioClip NoiseClip(int rate, double seconds) {
  fsbsed::audio::AudioClip clip;
  clip.sample_rate = rate;
  std::mt19937 rng(1);
  std::normal_distribution<float> n(0.0f, 0.1f);
  clip.samples.resize(static_cast<size_t>(rate * seconds));
  for (float& s : clip.samples) s = n(rng);
  return clip;
}

void BM_BuildFeatures(benchmark::State& state) {
  fsbsed::dsp::FeatureConfig cfg;
  cfg.feature_set = static_cast<fsbsed::dsp::FeatureSet>(state.range(0));
  const auto clip = NoiseClip(cfg.sample_rate, 10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fsbsed::dsp::BuildFeatures(clip, cfg));
  }
  state.SetLabel(std::string(fsbsed::dsp::FeatureSetName(cfg.feature_set)));
  state.counters["audio_s/s"] =
      benchmark::Counter(10.0, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_BuildFeatures)
    ->Arg(static_cast<int>(fsbsed::dsp::FeatureSet::kLogMel))
    ->Arg(static_cast<int>(fsbsed::dsp::FeatureSet::kLogMelDeltaMfcc))
    ->Arg(static_cast<int>(fsbsed::dsp::FeatureSet::kPcen))
    ->Unit(benchmark::kMillisecond);

void BM_Resample(benchmark::State& state) {
  const auto clip = NoiseClip(44100, 10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fsbsed::audio::Resample(clip, static_cast<int>(state.range(0))));
  }
  state.counters["audio_s/s"] =
      benchmark::Counter(10.0, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Resample)->Arg(22050)->Arg(16000)->Unit(benchmark::kMillisecond);

}  // namespace
