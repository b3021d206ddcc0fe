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

#ifndef FSBSED_AUDIO_H_
#define FSBSED_AUDIO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fsbsed/error.h"

namespace fsbsed::audio {

// Pipeline sample rate. Recordings are resampled to this before feature
// extraction; 22500 is accepted as well for literal reproductions.
inline constexpr int kDefaultSampleRate = 22050;

// Mono waveform with amplitudes nominally in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;
  std::string source_path;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

enum class WavErrorKind {
  kUnreadable,           // file missing or I/O failure
  kMalformed,            // truncated or inconsistent RIFF structure
  kUnsupportedEncoding,  // valid RIFF but a codec or bit depth we do not decode
  kEmptyAudio,           // well formed, zero frames
};

const char* WavErrorKindName(WavErrorKind kind);

class WavError : public DataError {
 public:
  WavError(WavErrorKind kind, const std::string& source,
           const std::string& detail);

  WavErrorKind kind() const { return kind_; }

 private:
  WavErrorKind kind_;
};

// Decodes PCM 8/16/24/32-bit or IEEE float 32/64-bit WAV. Multichannel input
// is averaged to mono; integer PCM is scaled by 2^(bits-1).
AudioClip DecodeWav(const std::filesystem::path& path);
AudioClip DecodeWavBytes(std::span<const uint8_t> bytes,
                         const std::string& source);

enum class WavSampleFormat { kPcm16, kPcm24, kFloat32 };

// Writes a mono clip. Integer formats clip to [-1, 1).
void WriteWav(const std::filesystem::path& path, const AudioClip& clip,
              WavSampleFormat format = WavSampleFormat::kPcm16);
std::vector<uint8_t> EncodeWav(const AudioClip& clip, WavSampleFormat format);

// Band-limited rational resampling with a Kaiser-windowed sinc filter,
// evaluated polyphase. Output length is round(n * target / source).
AudioClip Resample(const AudioClip& clip, int target_rate);

}  // namespace fsbsed::audio

#endif  // FSBSED_AUDIO_H_
