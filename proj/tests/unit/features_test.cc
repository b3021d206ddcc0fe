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
#include <filesystem>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fsbsed/error.h"
#include "fsbsed/features.h"

namespace fsbsed::dsp {
namespace {

audio::AudioClip Sine(double hz, size_t n, int rate = 22050) {
  audio::AudioClip c;
  c.sample_rate = rate;
  for (size_t i = 0; i < n; ++i) {
    c.samples.push_back(static_cast<float>(std::sin(2 * std::numbers::pi * hz * i / rate)));
  }
  return c;
}

Matrix RandomMatrix(int rows, int cols, uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

FeatureMatrix Wrap(Matrix m) {
  FeatureMatrix f;
  f.values = std::move(m);
  f.frame_hop_seconds = 0.01;
  return f;
}

TEST(Stft, FrameCountAndZeros) {
  FeatureConfig cfg;
  audio::AudioClip c;
  c.sample_rate = 22050;
  c.samples.assign(22050, 0.0f);
  const FeatureMatrix p = StftPower(c, cfg);
  EXPECT_EQ(p.frames(), 87);
  EXPECT_EQ(p.dim(), 513);
  EXPECT_EQ(p.values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(p.frame_hop_seconds, 256.0 / 22050.0);
}

TEST(Stft, SinePeakBinMatchesDirectDft) {
  FeatureConfig cfg;
  const audio::AudioClip c = Sine(1000.0, 22050);
  const FeatureMatrix p = StftPower(c, cfg);
  // Interior frames: compare against a direct Hann-windowed DFT.
  for (int t : {10, 40, 80}) {
    const int start = t * cfg.hop_len - cfg.window_len / 2;
    int best = 0;
    double best_power = -1.0;
    for (int k = 0; k < cfg.n_bins(); ++k) {
      double re = 0.0, im = 0.0;
      for (int n = 0; n < cfg.window_len; ++n) {
        const double w = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * n / cfg.window_len);
        const double x = c.samples[start + n] * w;
        re += x * std::cos(2 * std::numbers::pi * k * n / cfg.window_len);
        im -= x * std::sin(2 * std::numbers::pi * k * n / cfg.window_len);
      }
      const double power = re * re + im * im;
      EXPECT_NEAR(p.values(t, k), power, 1e-6 * (1.0 + power));
      if (power > best_power) {
        best_power = power;
        best = k;
      }
    }
    EXPECT_EQ(best, 46);
    Eigen::Index arg = 0;
    p.values.row(t).maxCoeff(&arg);
    EXPECT_EQ(arg, 46);
  }
}

TEST(Mel, FilterbankMatchesIndependentConstruction) {
  FeatureConfig cfg;
  const Matrix fb = MelFilterbank(cfg.sample_rate, cfg.window_len, cfg.n_mels);
  // Independent Slaney mel: linear below 1 kHz, log above, from scratch.
  auto hz_to_mel = [](double f) {
    return f < 1000.0 ? 3.0 * f / 200.0 : 15.0 + 27.0 * std::log(f / 1000.0) / std::log(6.4);
  };
  auto mel_to_hz = [](double m) {
    return m < 15.0 ? 200.0 * m / 3.0 : 1000.0 * std::pow(6.4, (m - 15.0) / 27.0);
  };
  const double top = hz_to_mel(cfg.sample_rate / 2.0);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = mel_to_hz(top * m / (cfg.n_mels + 1));
    const double c = mel_to_hz(top * (m + 1) / (cfg.n_mels + 1));
    const double hi = mel_to_hz(top * (m + 2) / (cfg.n_mels + 1));
    for (int k = 0; k < cfg.n_bins(); ++k) {
      const double f = k * static_cast<double>(cfg.sample_rate) / cfg.window_len;
      double v = 0.0;
      if (f > lo && f <= c) v = (f - lo) / (c - lo);
      if (f > c && f < hi) v = (hi - f) / (hi - c);
      v *= 2.0 / (hi - lo);
      ASSERT_NEAR(fb(m, k), v, 1e-12) << "mel " << m << " bin " << k;
    }
  }
}

TEST(Mel, LinearInThePowerSpectrum) {
  FeatureConfig cfg;
  const Matrix fb = MelFilterbank(cfg.sample_rate, cfg.window_len, cfg.n_mels);
  Matrix impulse = Matrix::Zero(2, cfg.n_bins());
  impulse(1, 100) = 1.0;
  const FeatureMatrix mel = MelSpectrogram(Wrap(impulse), cfg);
  EXPECT_EQ(mel.values.row(0).cwiseAbs().maxCoeff(), 0.0);
  for (int m = 0; m < cfg.n_mels; ++m) EXPECT_DOUBLE_EQ(mel.values(1, m), fb(m, 100));
  const Matrix power = RandomMatrix(3, cfg.n_bins(), 7, 0.0, 2.0);
  const FeatureMatrix got = MelSpectrogram(Wrap(power), cfg);
  for (int t = 0; t < 3; ++t) {
    for (int m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      for (int k = 0; k < cfg.n_bins(); ++k) acc += power(t, k) * fb(m, k);
      ASSERT_NEAR(got.values(t, m), acc, 1e-12);
    }
  }
}

TEST(LogMel, FloorAndScaling) {
  FeatureConfig cfg;
  Matrix m(1, 3);
  m << 0.0, 1.0 - 1e-10, 5.0;
  const FeatureMatrix a = LogMel(Wrap(m), cfg);
  EXPECT_NEAR(a.values(0, 0), std::log(1e-10), 1e-12);
  EXPECT_NEAR(a.values(0, 1), 0.0, 1e-12);
  const FeatureMatrix b = LogMel(Wrap(m * 10.0), cfg);
  EXPECT_NEAR(b.values(0, 2) - a.values(0, 2), std::log(10.0), 1e-9);
}

TEST(Mfcc, ConstantInputHasOnlyDc) {
  FeatureConfig cfg;
  const FeatureMatrix out = Mfcc(Wrap(Matrix::Constant(4, cfg.n_mels, -3.7)), cfg);
  ASSERT_EQ(out.dim(), cfg.n_mfcc);
  for (int t = 0; t < 4; ++t) {
    for (int k = 1; k < cfg.n_mfcc; ++k) EXPECT_LT(std::abs(out.values(t, k)), 1e-9);
    EXPECT_NEAR(out.values(t, 0), -3.7 * std::sqrt(static_cast<double>(cfg.n_mels)), 1e-9);
  }
  EXPECT_EQ(Mfcc(Wrap(Matrix::Zero(2, cfg.n_mels)), cfg).values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Mfcc, MatchesDirectSumDct) {
  FeatureConfig cfg;
  const Matrix x = RandomMatrix(5, cfg.n_mels, 11, -20.0, 5.0);
  const FeatureMatrix out = Mfcc(Wrap(x), cfg);
  const int n = cfg.n_mels;
  for (int t = 0; t < 5; ++t) {
    for (int k = 0; k < cfg.n_mfcc; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += x(t, i) * std::cos(std::numbers::pi / n * (i + 0.5) * k);
      }
      acc *= std::sqrt((k == 0 ? 1.0 : 2.0) / n);
      ASSERT_NEAR(out.values(t, k), acc, 1e-10);
    }
  }
}

TEST(Delta, ConstantAndRamp) {
  Matrix constant = Matrix::Constant(20, 3, 2.5);
  EXPECT_EQ(Delta(Wrap(constant), 9).values.cwiseAbs().maxCoeff(), 0.0);
  Matrix ramp(20, 2);
  for (int t = 0; t < 20; ++t) {
    ramp(t, 0) = 0.75 * t;
    ramp(t, 1) = -2.0 * t + 1.0;
  }
  const FeatureMatrix d = Delta(Wrap(ramp), 9);
  for (int t = 4; t < 16; ++t) {
    EXPECT_DOUBLE_EQ(d.values(t, 0), 0.75);
    EXPECT_DOUBLE_EQ(d.values(t, 1), -2.0);
  }
}

TEST(Delta, MatchesRegressionFormulaWithEdgeReplication) {
  const Matrix x = RandomMatrix(12, 4, 3);
  const int width = 5;
  const FeatureMatrix d = Delta(Wrap(x), width);
  const int half = width / 2;
  for (int t = 0; t < 12; ++t) {
    for (int c = 0; c < 4; ++c) {
      double num = 0.0, den = 0.0;
      for (int n = -half; n <= half; ++n) {
        num += n * x(std::clamp(t + n, 0, 11), c);
        den += n * n;
      }
      ASSERT_NEAR(d.values(t, c), num / den, 1e-12);
    }
  }
}

TEST(Pcen, ZeroAndSteadyState) {
  FeatureConfig cfg;
  EXPECT_EQ(Pcen(Wrap(Matrix::Zero(10, 4)), cfg).values.cwiseAbs().maxCoeff(), 0.0);
  const PcenParams& p = cfg.pcen;
  Matrix in(400, 3);
  const double levels[3] = {1e-4, 0.3, 250.0};
  for (int c = 0; c < 3; ++c) in.col(c).setConstant(levels[c]);
  const FeatureMatrix out = Pcen(Wrap(in), cfg);
  for (int c = 0; c < 3; ++c) {
    const double e = levels[c];
    const double expected =
        std::pow(e / std::pow(p.epsilon + e, p.alpha) + p.delta, p.r) - std::pow(p.delta, p.r);
    EXPECT_NEAR(out.values(399, c), expected, 1e-6);
  }
}

TEST(Pcen, RejectsNegativeEnergy) {
  FeatureConfig cfg;
  EXPECT_THROW(Pcen(Wrap(Matrix::Constant(2, 2, -1.0)), cfg), UsageError);
}

TEST(Build, DimensionsAndComposition) {
  const audio::AudioClip c = Sine(2000.0, 11025);
  FeatureConfig cfg;
  EXPECT_EQ(BuildFeatures(c, cfg).dim(), 128);
  cfg.feature_set = FeatureSet::kLogMelMfcc;
  EXPECT_EQ(BuildFeatures(c, cfg).dim(), 160);
  cfg.feature_set = FeatureSet::kPcenDeltaMfcc;
  const FeatureMatrix f = BuildFeatures(c, cfg);
  ASSERT_EQ(f.dim(), 160);
  const FeatureMatrix mel = MelSpectrogram(StftPower(c, cfg), cfg);
  const FeatureMatrix expected_tail = Delta(Mfcc(LogMel(mel, cfg), cfg), cfg.delta_width);
  EXPECT_EQ((f.values.rightCols(32) - expected_tail.values).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((f.values.leftCols(128) - Pcen(mel, cfg).values).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Build, RejectsWrongRateAndBadConfig) {
  FeatureConfig cfg;
  EXPECT_THROW(BuildFeatures(Sine(440.0, 1000, 16000), cfg), UsageError);
  cfg.n_mfcc = 200;
  EXPECT_THROW(cfg.Validate(), UsageError);
  EXPECT_THROW(ParseFeatureSet("spectral_flux"), UsageError);
  for (auto s : {FeatureSet::kMel, FeatureSet::kPcenMfcc, FeatureSet::kLogMelDeltaMfcc}) {
    EXPECT_EQ(ParseFeatureSet(FeatureSetName(s)), s);
  }
}

TEST(Standardize, ZeroMeanUnitVarianceAndConstantColumns) {
  FeatureMatrix f = Wrap(RandomMatrix(50, 3, 5, 2.0, 9.0));
  f.values.col(2).setConstant(4.0);
  StandardizeColumns(f);
  for (int c = 0; c < 2; ++c) {
    EXPECT_NEAR(f.values.col(c).mean(), 0.0, 1e-12);
    EXPECT_NEAR(f.values.col(c).squaredNorm() / 50.0, 1.0, 1e-12);
  }
  EXPECT_EQ(f.values.col(2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dump, BinaryRoundTripAndCsv) {
  const auto dir = std::filesystem::temp_directory_path() / "fsbsed_features_test";
  std::filesystem::create_directories(dir);
  const FeatureMatrix f = Wrap(RandomMatrix(7, 5, 9));
  WriteFeatureMatrix(dir / "f.bin", f, DumpFormat::kBinary);
  const FeatureMatrix back = ReadFeatureMatrix(dir / "f.bin");
  ASSERT_EQ(back.frames(), 7);
  ASSERT_EQ(back.dim(), 5);
  EXPECT_EQ(back.frame_hop_seconds, f.frame_hop_seconds);
  EXPECT_EQ((back.values - f.values.cast<float>().cast<double>()).cwiseAbs().maxCoeff(), 0.0);
  WriteFeatureMatrix(dir / "f.csv", f, DumpFormat::kCsv);
  EXPECT_GT(std::filesystem::file_size(dir / "f.csv"), 0u);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace fsbsed::dsp
