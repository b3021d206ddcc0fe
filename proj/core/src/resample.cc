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
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>
#include <fmt/format.h>

#include "fsbsed/audio.h"

namespace fsbsed::audio {
namespace {

// Zero crossings of the low-pass sinc kept on each side of the centre.
constexpr int kZeroCrossings = 32;
constexpr double kKaiserBeta = 8.6;
// Passband edge as a fraction of the lower Nyquist frequency.
constexpr double kRolloff = 0.95;
// Above this many phases the filter bank is evaluated on the fly.
constexpr int64_t kMaxTabulatedPhases = 4096;

class SincKernel {
 public:
  SincKernel(double cutoff, double half_width)
      : cutoff_(cutoff),
        half_width_(half_width),
        norm_(1.0 / boost::math::cyl_bessel_i(0, kKaiserBeta)) {}

  // Impulse response at offset t input samples from the output instant.
  double operator()(double t) const {
    const double r = t / half_width_;
    if (r <= -1.0 || r >= 1.0) return 0.0;
    const double x = std::numbers::pi * cutoff_ * t;
    const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x;
    const double window =
        boost::math::cyl_bessel_i(0, kKaiserBeta * std::sqrt(1.0 - r * r)) *
        norm_;
    return cutoff_ * sinc * window;
  }

  double half_width() const { return half_width_; }

 private:
  double cutoff_;
  double half_width_;
  double norm_;
};

}  // namespace

AudioClip Resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) {
    throw UsageError(fmt::format("resample: target rate {} must be positive",
                                 target_rate));
  }
  if (clip.sample_rate <= 0) {
    throw UsageError("resample: clip has no sample rate");
  }
  if (target_rate == clip.sample_rate) return clip;

  const int64_t g = std::gcd<int64_t, int64_t>(clip.sample_rate, target_rate);
  const int64_t up = target_rate / g;
  const int64_t down = clip.sample_rate / g;
  const int64_t n_in = static_cast<int64_t>(clip.samples.size());
  const int64_t n_out = static_cast<int64_t>(
      std::llround(static_cast<double>(n_in) * up / down));

  const double cutoff =
      kRolloff * std::min(1.0, static_cast<double>(up) / down);
  const SincKernel kernel(cutoff, kZeroCrossings / cutoff);
  const int64_t reach = static_cast<int64_t>(std::ceil(kernel.half_width())) + 1;
  const int64_t taps = 2 * reach + 1;

  // table[phase * taps + (j + reach)] = h(j - phase / up).
  std::vector<double> table;
  const bool tabulate = up <= kMaxTabulatedPhases;
  if (tabulate) {
    table.resize(static_cast<size_t>(up * taps));
    for (int64_t phase = 0; phase < up; ++phase) {
      const double frac = static_cast<double>(phase) / up;
      for (int64_t j = -reach; j <= reach; ++j) {
        table[phase * taps + j + reach] = kernel(static_cast<double>(j) - frac);
      }
    }
  }

  AudioClip out;
  out.sample_rate = target_rate;
  out.source_path = clip.source_path;
  out.samples.resize(static_cast<size_t>(std::max<int64_t>(n_out, 0)));
  const float* x = clip.samples.data();
  for (int64_t k = 0; k < n_out; ++k) {
    const int64_t pos = k * down;
    const int64_t base = pos / up;
    const int64_t phase = pos % up;
    const double frac = static_cast<double>(phase) / up;
    double acc = 0.0;
    const int64_t j_lo = std::max<int64_t>(-reach, -base);
    const int64_t j_hi = std::min<int64_t>(reach, n_in - 1 - base);
    if (tabulate) {
      const double* row = table.data() + phase * taps + reach;
      for (int64_t j = j_lo; j <= j_hi; ++j) acc += row[j] * x[base + j];
    } else {
      for (int64_t j = j_lo; j <= j_hi; ++j) {
        acc += kernel(static_cast<double>(j) - frac) * x[base + j];
      }
    }
    out.samples[static_cast<size_t>(k)] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace fsbsed::audio
