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

#ifndef FSBSED_CHECKPOINT_H_
#define FSBSED_CHECKPOINT_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "fsbsed/network.h"
#include "fsbsed/optimizer.h"

// Binary layout, little endian:
//   "FSBSEDCK" u32 version
//   u32 input_height, input_width, channels[3]; f64 slope, bn_eps, bn_momentum
//   u32 length + metadata bytes (free-form, JSON by convention)
//   u32 count, then per tensor: u32 name length, name, u8 kind (0 param,
//     1 buffer), u32 rows, u32 cols
//   f32 data of every tensor in table order
//   u8 has_optimizer; if set: u64 step, f64 x6 config, f32 m and v per param

namespace fsbsed::nn {

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  EmbeddingNetwork<float> network;
  std::string metadata;
  std::optional<AdamConfig> optimizer_config;
  std::optional<AdamState<float>> optimizer_state;
};

std::string EncodeCheckpoint(const EmbeddingNetwork<float>& network,
                             std::string_view metadata,
                             const Adam<float>* optimizer = nullptr);
// Throws DataError naming `source` on any malformed or inconsistent input.
Checkpoint DecodeCheckpoint(std::string_view bytes, const std::string& source);

// Writes via a temporary file and rename, so readers never see a partial file.
void SaveCheckpoint(const std::filesystem::path& path,
                    const EmbeddingNetwork<float>& network,
                    std::string_view metadata,
                    const Adam<float>* optimizer = nullptr);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace fsbsed::nn

#endif  // FSBSED_CHECKPOINT_H_
