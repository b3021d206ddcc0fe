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
#include <cstring>
#include <filesystem>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "fsbsed/audio.h"

namespace fsbsed::audio {
namespace {

// Minimal RIFF writer kept separate from the library encoder.
struct RawWav {
  uint16_t format = 1;
  uint16_t channels = 1;
  uint32_t rate = 22050;
  uint16_t bits = 16;
  std::vector<uint8_t> payload;

  std::vector<uint8_t> Bytes() const {
    std::vector<uint8_t> out;
    auto u32 = [&](uint32_t v) {
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    };
    auto u16 = [&](uint16_t v) {
      out.push_back(static_cast<uint8_t>(v));
      out.push_back(static_cast<uint8_t>(v >> 8));
    };
    auto tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
    tag("RIFF");
    u32(static_cast<uint32_t>(36 + payload.size()));
    tag("WAVE");
    tag("fmt ");
    u32(16);
    u16(format);
    u16(channels);
    u32(rate);
    u32(rate * channels * bits / 8);
    u16(static_cast<uint16_t>(channels * bits / 8));
    u16(bits);
    tag("data");
    u32(static_cast<uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
  }
};

void PushI16(std::vector<uint8_t>& v, int16_t s) {
  v.push_back(static_cast<uint8_t>(s & 0xff));
  v.push_back(static_cast<uint8_t>((s >> 8) & 0xff));
}

TEST(Wav, Pcm16Scaling) {
  RawWav w;
  PushI16(w.payload, 16384);
  PushI16(w.payload, -32768);
  const auto bytes = w.Bytes();
  const AudioClip clip = DecodeWavBytes(bytes, "mem");
  ASSERT_EQ(clip.samples.size(), 2u);
  EXPECT_EQ(clip.samples[0], 0.5f);
  EXPECT_EQ(clip.samples[1], -1.0f);
  EXPECT_EQ(clip.sample_rate, 22050);
}

TEST(Wav, StereoIsAveraged) {
  RawWav w;
  w.format = 3;
  w.bits = 32;
  w.channels = 2;
  for (float s : {0.2f, 0.4f, -1.0f, 0.0f}) {
    uint8_t b[4];
    std::memcpy(b, &s, 4);
    w.payload.insert(w.payload.end(), b, b + 4);
  }
  const auto bytes = w.Bytes();
  const AudioClip clip = DecodeWavBytes(bytes, "mem");
  ASSERT_EQ(clip.samples.size(), 2u);
  EXPECT_NEAR(clip.samples[0], 0.3f, 1e-7);
  EXPECT_NEAR(clip.samples[1], -0.5f, 1e-7);
}

TEST(Wav, TruncatedHeaderIsMalformed) {
  RawWav w;
  PushI16(w.payload, 1);
  auto bytes = w.Bytes();
  bytes.resize(30);
  try {
    DecodeWavBytes(bytes, "cut.wav");
    FAIL() << "expected WavError";
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavErrorKind::kMalformed);
    EXPECT_NE(std::string(e.what()).find("cut.wav"), std::string::npos);
  }
}

TEST(Wav, EmptyAndUnsupported) {
  RawWav empty;
  auto bytes = empty.Bytes();
  try {
    DecodeWavBytes(bytes, "e.wav");
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavErrorKind::kEmptyAudio);
  }
  RawWav alaw;
  alaw.format = 6;
  alaw.bits = 8;
  alaw.payload = {1, 2, 3};
  bytes = alaw.Bytes();
  try {
    DecodeWavBytes(bytes, "a.wav");
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavErrorKind::kUnsupportedEncoding);
  }
  try {
    DecodeWav("/nonexistent/file.wav");
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavErrorKind::kUnreadable);
  }
}

TEST(Wav, RoundTripThroughFile) {
  AudioClip clip;
  clip.sample_rate = 16000;
  for (int i = 0; i < 1000; ++i) clip.samples.push_back(std::sin(0.01f * i) * 0.7f);
  const auto dir = std::filesystem::temp_directory_path() / "fsbsed_audio_test";
  std::filesystem::create_directories(dir);
  for (auto [fmt, tol] : {std::pair{WavSampleFormat::kFloat32, 0.0},
                          std::pair{WavSampleFormat::kPcm24, 1.0 / (1 << 23)},
                          std::pair{WavSampleFormat::kPcm16, 1.0 / (1 << 15)}}) {
    const auto path = dir / "rt.wav";
    WriteWav(path, clip, fmt);
    const AudioClip back = DecodeWav(path);
    ASSERT_EQ(back.samples.size(), clip.samples.size());
    EXPECT_EQ(back.sample_rate, 16000);
    for (size_t i = 0; i < clip.samples.size(); ++i) {
      ASSERT_NEAR(back.samples[i], clip.samples[i], tol);
    }
  }
  std::filesystem::remove_all(dir);
}

AudioClip Sine(int rate, double hz, double seconds) {
  AudioClip c;
  c.sample_rate = rate;
  const size_t n = static_cast<size_t>(std::llround(rate * seconds));
  for (size_t i = 0; i < n; ++i) {
    c.samples.push_back(static_cast<float>(0.5 * std::sin(2 * std::numbers::pi * hz * i / rate)));
  }
  return c;
}

TEST(Resample, IdentityAtSameRate) {
  const AudioClip c = Sine(22050, 440.0, 0.1);
  EXPECT_EQ(Resample(c, 22050).samples, c.samples);
}

TEST(Resample, LengthArithmetic) {
  EXPECT_EQ(Resample(Sine(44100, 440.0, 1.0), 22050).samples.size(), 22050u);
  EXPECT_EQ(Resample(Sine(44100, 440.0, 1.0), 48000).samples.size(), 48000u);
  EXPECT_EQ(Resample(Sine(16000, 440.0, 0.5), 22050).samples.size(), 11025u);
}

// Hann-windowed direct DFT power of every bin.
std::vector<double> DftPower(const std::vector<float>& x) {
  const size_t n = x.size();
  std::vector<double> w(n);
  for (size_t i = 0; i < n; ++i) {
    w[i] = x[i] * (0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / n));
  }
  std::vector<double> p(n / 2 + 1);
  for (size_t k = 0; k < p.size(); ++k) {
    // Goertzel recurrence.
    const double coeff = 2 * std::cos(2 * std::numbers::pi * k / n);
    double s1 = 0.0, s2 = 0.0;
    for (double v : w) {
      const double s = v + coeff * s1 - s2;
      s2 = s1;
      s1 = s;
    }
    p[k] = s1 * s1 + s2 * s2 - coeff * s1 * s2;
  }
  return p;
}

TEST(Resample, SinePeakSurvivesAndImagesAreSuppressed) {
  const AudioClip out = Resample(Sine(44100, 1000.0, 1.0), 22050);
  const std::vector<double> p = DftPower(out.samples);
  size_t peak = 0;
  for (size_t k = 1; k < p.size(); ++k) {
    if (p[k] > p[peak]) peak = k;
  }
  EXPECT_EQ(peak, 1000u);  // 1 Hz bins over one second
  double main = 0.0, rest = 0.0;
  for (size_t k = 0; k < p.size(); ++k) {
    (k + 3 >= peak && k <= peak + 3 ? main : rest) += p[k];
  }
  EXPECT_LT(10.0 * std::log10(rest / main), -60.0);
}

}  // namespace
}  // namespace fsbsed::audio
