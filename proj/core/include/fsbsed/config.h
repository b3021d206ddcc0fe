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

#ifndef FSBSED_CONFIG_H_
#define FSBSED_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fsbsed/features.h"
#include "fsbsed/inference.h"
#include "fsbsed/network.h"
#include "fsbsed/trainer.h"

// Every tunable of the pipeline, addressable by a dotted key such as
// "features.n_mels". Config files are JSON objects nesting the same keys;
// any key not in the registry is rejected.

namespace fsbsed::experiment {

struct Settings {
  std::string train_root;
  std::string eval_root;
  std::string output_dir = "out";
  std::string checkpoint;
  uint64_t seed = 0;
  int threads = 1;
  protonet::Distance distance = protonet::Distance::kSquaredEuclidean;
  int patch_frames = data::kDefaultPatchFrames;

  dsp::FeatureConfig features;
  bool standardize = true;
  nn::NetworkConfig network;
  protonet::TrainConfig train;
  double validation_fraction = 0.2;
  inference::InferenceConfig inference;
  double min_iou = 0.3;
  std::string group_by = "subset";  // subset | file

  void Validate() const;
};

struct KeyDoc {
  std::string key;
  std::string type;
  std::string default_value;  // JSON text
  std::string help;
};

// All keys in registry order with their defaults.
const std::vector<KeyDoc>& DescribeKeys();
// One line per key, for --help.
std::string FormatKeyHelp();

void ApplyJsonText(Settings& s, std::string_view json_text, const std::string& source);
Settings LoadSettingsFile(const std::filesystem::path& path);
// `value` is parsed as JSON; text that is not valid JSON is taken as a string.
void ApplyOverride(Settings& s, std::string_view key, std::string_view value);
// Every key, nested, pretty printed.
std::string SettingsToJson(const Settings& s);

// Views with the shared top-level keys (seed, threads, distance, patch size)
// filled in.
protonet::TrainConfig TrainConfigOf(const Settings& s);
inference::InferenceConfig InferenceConfigOf(const Settings& s);

// Feature, patch and distance settings a checkpoint must be used with.
std::string CheckpointMetadata(const Settings& s);
void ApplyCheckpointMetadata(Settings& s, std::string_view metadata,
                             const std::string& source);

}  // namespace fsbsed::experiment

#endif  // FSBSED_CONFIG_H_
