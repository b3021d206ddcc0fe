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

#ifndef FSBSED_TESTS_SUPPORT_SYNTHETIC_H_
#define FSBSED_TESTS_SUPPORT_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fsbsed/audio.h"

// Synthetic bioacoustic corpora with known ground truth. Three "species"
// with distinct spectro-temporal templates are scattered over coloured noise:
//   tone   steady harmonic tone near 2 kHz
//   chirp  upward sweep 3 -> 6 kHz
//   pulse  1.2 kHz carrier gated into a 30 Hz pulse train

namespace fsbsed::testing {

enum class NoiseColor { kWhite, kPink, kBrown, kBlue };

inline const std::vector<std::string>& SpeciesNames() {
  static const std::vector<std::string> kNames = {"tone", "chirp", "pulse"};
  return kNames;
}

struct SyntheticEvent {
  double onset = 0.0;
  double offset = 0.0;
  int species = 0;
};

struct SyntheticClip {
  audio::AudioClip clip;
  std::vector<SyntheticEvent> events;  // sorted by onset
};

struct ClipSpec {
  int sample_rate = audio::kDefaultSampleRate;
  double seconds = 30.0;
  NoiseColor noise = NoiseColor::kPink;
  double noise_rms = 0.05;
  double event_peak = 0.25;
  // Events per species, in species order.
  std::vector<int> events_per_species = {4, 4, 4};
  double min_gap_seconds = 0.4;
  uint64_t seed = 0;
};

SyntheticClip MakeClip(const ClipSpec& spec);

// Adds a species template starting at `onset` with the given duration.
void RenderEvent(std::vector<float>& samples, int sample_rate, int species,
                 double onset, double duration, double peak, uint64_t seed);

std::vector<float> ColoredNoise(size_t n, NoiseColor color, double rms,
                                uint64_t seed);

struct CorpusSpec {
  int sample_rate = audio::kDefaultSampleRate;
  int train_files = 10;
  int eval_files = 4;
  double train_seconds = 30.0;
  double eval_seconds = 40.0;
  int train_events_per_species = 4;
  int eval_target_events = 14;
  int eval_distractor_events = 3;
  NoiseColor train_noise = NoiseColor::kPink;
  NoiseColor eval_noise = NoiseColor::kPink;
  double noise_rms = 0.05;
  double eval_noise_rms = -1.0;  // negative: same as noise_rms
  double event_peak = 0.25;
  uint64_t seed = 1;
};

struct CorpusPaths {
  std::filesystem::path train_root;  // <root>/train/synth/*.wav + multi-class csv
  std::filesystem::path eval_root;   // <root>/eval/<species>/*.wav + single "Q" csv
};

// Writes the corpus under `root`. Eval file i targets species i % 3 and
// contains a few unannotated events of another species.
CorpusPaths WriteCorpus(const std::filesystem::path& root, const CorpusSpec& spec);

}  // namespace fsbsed::testing

#endif  // FSBSED_TESTS_SUPPORT_SYNTHETIC_H_
