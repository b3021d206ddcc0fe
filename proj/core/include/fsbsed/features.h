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

#ifndef FSBSED_FEATURES_H_
#define FSBSED_FEATURES_H_

#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "fsbsed/audio.h"

namespace fsbsed::dsp {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class FeatureSet {
  kMel,
  kLogMel,
  kLogMelMfcc,
  kLogMelDeltaMfcc,
  kPcen,
  kPcenMfcc,
  kPcenDeltaMfcc,
};

// Canonical names: mel, log_mel, log_mel+mfcc, log_mel+delta_mfcc, pcen,
// pcen+mfcc, pcen+delta_mfcc.
std::string_view FeatureSetName(FeatureSet set);
FeatureSet ParseFeatureSet(std::string_view name);

struct PcenParams {
  double alpha = 0.98;
  double delta = 2.0;
  double r = 0.5;
  double smoothing = 0.025;
  double epsilon = 1e-6;
};

struct FeatureConfig {
  int sample_rate = audio::kDefaultSampleRate;
  int window_len = 1024;
  int hop_len = 256;
  int n_mels = 128;
  int n_mfcc = 32;
  int delta_width = 9;
  FeatureSet feature_set = FeatureSet::kLogMel;
  PcenParams pcen;
  double log_floor = 1e-10;

  // Throws UsageError when an invariant does not hold.
  void Validate() const;

  int n_bins() const { return window_len / 2 + 1; }
  // Width of the stacked feature for feature_set.
  int feature_dim() const;
};

// Time x feature matrix. Row t describes the frame centred on
// t * frame_hop_seconds.
struct FeatureMatrix {
  Matrix values;
  double frame_hop_seconds = 0.0;

  int frames() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
};

// Hann-windowed power spectrum of reflect-padded, centred frames;
// 1 + len / hop frames of window_len / 2 + 1 bins.
FeatureMatrix StftPower(const audio::AudioClip& clip, const FeatureConfig& cfg);

// n_mels x n_bins Slaney-scale filterbank with area normalisation.
Matrix MelFilterbank(int sample_rate, int window_len, int n_mels,
                     double fmin = 0.0, double fmax = -1.0);

double HzToMel(double hz);
double MelToHz(double mel);

FeatureMatrix MelSpectrogram(const FeatureMatrix& power,
                             const FeatureConfig& cfg);
FeatureMatrix LogMel(const FeatureMatrix& mel, const FeatureConfig& cfg);
// Orthonormal DCT-II over the mel axis, first n_mfcc coefficients.
FeatureMatrix Mfcc(const FeatureMatrix& log_mel, const FeatureConfig& cfg);
// n_out x n_in orthonormal DCT-II matrix.
Matrix DctMatrix(int n_out, int n_in);
// Regression deltas over `width` frames with edge replication.
FeatureMatrix Delta(const FeatureMatrix& features, int width);
FeatureMatrix Pcen(const FeatureMatrix& mel, const FeatureConfig& cfg);

// Full pipeline for cfg.feature_set. Stacked sets concatenate blocks along the
// feature axis. The clip must already be at cfg.sample_rate.
FeatureMatrix BuildFeatures(const audio::AudioClip& clip,
                            const FeatureConfig& cfg);

// Standardises every column to zero mean and unit variance in place.
// Constant columns are centred only.
void StandardizeColumns(FeatureMatrix& features);

// Feature dump. Binary layout (little endian):
//   char[8]  "FSBFEAT1"
//   uint32   frames
//   uint32   dim
//   float64  frame_hop_seconds
//   float32  values[frames * dim]   row major
// The CSV layout is a "# frames=<n> dim=<d> hop_seconds=<h>" comment line
// followed by one comma-separated row per frame.
enum class DumpFormat { kBinary, kCsv };

void WriteFeatureMatrix(const std::filesystem::path& path,
                        const FeatureMatrix& features, DumpFormat format);
FeatureMatrix ReadFeatureMatrix(const std::filesystem::path& path);

}  // namespace fsbsed::dsp

#endif  // FSBSED_FEATURES_H_
