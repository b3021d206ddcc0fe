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

#include "fsbsed/audio.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

namespace fsbsed::audio {
namespace {

constexpr uint16_t kFormatPcm = 0x0001;
constexpr uint16_t kFormatFloat = 0x0003;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t ReadU16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t ReadU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

void PutU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void PutTag(std::vector<uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct WavFormat {
  uint16_t format_tag = 0;
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint16_t block_align = 0;
  uint16_t bits_per_sample = 0;
};

// Decodes one little-endian sample to a double in nominal [-1, 1].
double DecodeSample(const uint8_t* p, const WavFormat& fmt) {
  if (fmt.format_tag == kFormatFloat) {
    if (fmt.bits_per_sample == 32) {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
    double v;
    std::memcpy(&v, p, 8);
    return v;
  }
  switch (fmt.bits_per_sample) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<int16_t>(ReadU16(p)) / 32768.0;
    case 24: {
      int32_t v = static_cast<int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case 32:
      return static_cast<int32_t>(ReadU32(p)) / 2147483648.0;
  }
  return 0.0;
}

}  // namespace

const char* WavErrorKindName(WavErrorKind kind) {
  switch (kind) {
    case WavErrorKind::kUnreadable:
      return "unreadable";
    case WavErrorKind::kMalformed:
      return "malformed";
    case WavErrorKind::kUnsupportedEncoding:
      return "unsupported encoding";
    case WavErrorKind::kEmptyAudio:
      return "empty audio";
  }
  return "unknown";
}

WavError::WavError(WavErrorKind kind, const std::string& source,
                   const std::string& detail)
    : DataError(fmt::format("{}: {} WAV: {}", source, WavErrorKindName(kind),
                            detail)),
      kind_(kind) {}

AudioClip DecodeWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw WavError(WavErrorKind::kUnreadable, path.string(),
                   "cannot open file");
  }
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw WavError(WavErrorKind::kUnreadable, path.string(), "read failed");
  }
  return DecodeWavBytes(bytes, path.string());
}

AudioClip DecodeWavBytes(std::span<const uint8_t> bytes,
                         const std::string& source) {
  auto malformed = [&](const std::string& detail) {
    return WavError(WavErrorKind::kMalformed, source, detail);
  };
  if (bytes.size() < 12) throw malformed("file shorter than RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw malformed("missing RIFF/WAVE signature");
  }

  WavFormat fmt;
  bool have_fmt = false;
  const uint8_t* data = nullptr;
  size_t data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* chunk = bytes.data() + pos;
    const uint32_t chunk_size = ReadU32(chunk + 4);
    const size_t body = pos + 8;
    const size_t available = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16 || available < 16) {
        throw malformed("truncated fmt chunk");
      }
      const uint8_t* f = bytes.data() + body;
      fmt.format_tag = ReadU16(f);
      fmt.channels = ReadU16(f + 2);
      fmt.sample_rate = ReadU32(f + 4);
      fmt.block_align = ReadU16(f + 12);
      fmt.bits_per_sample = ReadU16(f + 14);
      if (fmt.format_tag == kFormatExtensible) {
        if (chunk_size < 40 || available < 40) {
          throw malformed("truncated WAVE_FORMAT_EXTENSIBLE fmt chunk");
        }
        // The sub-format GUID starts with the actual format tag.
        fmt.format_tag = ReadU16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw malformed("data chunk before fmt chunk");
      data = bytes.data() + body;
      // Tolerate streaming writers (size 0xFFFFFFFF) and short final chunks
      // by decoding only the complete frames present.
      data_size = std::min<size_t>(chunk_size, available);
      break;
    }
    const size_t advance = 8 + static_cast<size_t>(chunk_size) + (chunk_size & 1);
    if (advance > bytes.size() - pos) break;
    pos += advance;
  }
  if (!have_fmt) throw malformed("no fmt chunk");
  if (data == nullptr) throw malformed("no data chunk");
  if (fmt.channels == 0 || fmt.sample_rate == 0) {
    throw malformed("zero channels or sample rate");
  }

  const bool is_pcm = fmt.format_tag == kFormatPcm &&
                      (fmt.bits_per_sample == 8 || fmt.bits_per_sample == 16 ||
                       fmt.bits_per_sample == 24 || fmt.bits_per_sample == 32);
  const bool is_float = fmt.format_tag == kFormatFloat &&
                        (fmt.bits_per_sample == 32 || fmt.bits_per_sample == 64);
  if (!is_pcm && !is_float) {
    throw WavError(WavErrorKind::kUnsupportedEncoding, source,
                   fmt::format("format tag 0x{:04x}, {} bits", fmt.format_tag,
                               fmt.bits_per_sample));
  }
  const size_t bytes_per_sample = fmt.bits_per_sample / 8;
  const size_t frame_bytes = bytes_per_sample * fmt.channels;
  if (fmt.block_align != 0 && fmt.block_align != frame_bytes) {
    throw malformed(fmt::format("block align {} does not match {} channels x "
                                "{} bits",
                                fmt.block_align, fmt.channels,
                                fmt.bits_per_sample));
  }
  const size_t frames = data_size / frame_bytes;
  if (frames == 0) {
    throw WavError(WavErrorKind::kEmptyAudio, source, "no sample frames");
  }

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt.sample_rate);
  clip.source_path = source;
  clip.samples.resize(frames);
  for (size_t i = 0; i < frames; ++i) {
    const uint8_t* frame = data + i * frame_bytes;
    double acc = 0.0;
    for (size_t c = 0; c < fmt.channels; ++c) {
      acc += DecodeSample(frame + c * bytes_per_sample, fmt);
    }
    const double mono = acc / fmt.channels;
    if (!std::isfinite(mono)) {
      throw malformed(fmt::format("non-finite sample at frame {}", i));
    }
    clip.samples[i] = static_cast<float>(mono);
  }
  return clip;
}

std::vector<uint8_t> EncodeWav(const AudioClip& clip, WavSampleFormat format) {
  if (clip.sample_rate <= 0) {
    throw UsageError("EncodeWav: sample rate must be positive");
  }
  uint16_t tag = kFormatPcm;
  uint16_t bits = 16;
  if (format == WavSampleFormat::kPcm24) bits = 24;
  if (format == WavSampleFormat::kFloat32) {
    tag = kFormatFloat;
    bits = 32;
  }
  const uint32_t bytes_per_sample = bits / 8;
  const uint32_t data_bytes =
      static_cast<uint32_t>(clip.samples.size() * bytes_per_sample);

  std::vector<uint8_t> out;
  out.reserve(44 + data_bytes);
  PutTag(out, "RIFF");
  PutU32(out, 36 + data_bytes);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  PutU32(out, 16);
  PutU16(out, tag);
  PutU16(out, 1);
  PutU32(out, static_cast<uint32_t>(clip.sample_rate));
  PutU32(out, static_cast<uint32_t>(clip.sample_rate) * bytes_per_sample);
  PutU16(out, static_cast<uint16_t>(bytes_per_sample));
  PutU16(out, bits);
  PutTag(out, "data");
  PutU32(out, data_bytes);
  for (float s : clip.samples) {
    if (format == WavSampleFormat::kFloat32) {
      uint32_t raw;
      std::memcpy(&raw, &s, 4);
      PutU32(out, raw);
      continue;
    }
    const double full = format == WavSampleFormat::kPcm16 ? 32768.0 : 8388608.0;
    const double scaled = std::round(static_cast<double>(s) * full);
    const int32_t v =
        static_cast<int32_t>(std::clamp(scaled, -full, full - 1.0));
    if (format == WavSampleFormat::kPcm16) {
      PutU16(out, static_cast<uint16_t>(static_cast<int16_t>(v)));
    } else {
      out.push_back(static_cast<uint8_t>(v & 0xFF));
      out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
      out.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
    }
  }
  return out;
}

void WriteWav(const std::filesystem::path& path, const AudioClip& clip,
              WavSampleFormat format) {
  const std::vector<uint8_t> bytes = EncodeWav(clip, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError(fmt::format("{}: cannot open for writing", path.string()));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw DataError(fmt::format("{}: write failed", path.string()));
  }
}

}  // namespace fsbsed::audio
