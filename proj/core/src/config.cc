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

#include "fsbsed/config.h"

#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

#include <fmt/format.h>

#include "config_json.h"
#include "fsbsed/error.h"

namespace fsbsed::experiment {
namespace {

using nlohmann::json;

using Target = std::variant<int*, double*, bool*, std::string*, uint64_t*,
                            dsp::FeatureSet*, protonet::Distance*,
                            std::array<int, 3>*>;

struct Entry {
  const char* key;
  const char* help;
  std::function<Target(Settings&)> bind;
};

const std::vector<Entry>& Registry() {
  static const std::vector<Entry> kEntries = {
      {"train_root", "training dataset root (<root>/<subset>/<file>.wav + .csv)",
       [](Settings& s) -> Target { return &s.train_root; }},
      {"eval_root", "evaluation dataset root, one target class per file",
       [](Settings& s) -> Target { return &s.eval_root; }},
      {"output_dir", "directory for checkpoints, predictions and reports",
       [](Settings& s) -> Target { return &s.output_dir; }},
      {"checkpoint", "checkpoint path read by infer (default <output_dir>/model.ckpt)",
       [](Settings& s) -> Target { return &s.checkpoint; }},
      {"seed", "base seed for initialisation, episodes and negative sets",
       [](Settings& s) -> Target { return &s.seed; }},
      {"threads", "worker threads; 1 is fully deterministic",
       [](Settings& s) -> Target { return &s.threads; }},
      {"distance", "prototype distance: euclidean | cosine",
       [](Settings& s) -> Target { return &s.distance; }},
      {"patch_frames", "frames per network input patch",
       [](Settings& s) -> Target { return &s.patch_frames; }},

      {"features.set",
       "mel | log_mel | log_mel+mfcc | log_mel+delta_mfcc | pcen | pcen+mfcc | "
       "pcen+delta_mfcc",
       [](Settings& s) -> Target { return &s.features.feature_set; }},
      {"features.sample_rate", "audio is resampled to this rate (Hz)",
       [](Settings& s) -> Target { return &s.features.sample_rate; }},
      {"features.window_len", "STFT window and FFT length (samples)",
       [](Settings& s) -> Target { return &s.features.window_len; }},
      {"features.hop_len", "STFT hop (samples)",
       [](Settings& s) -> Target { return &s.features.hop_len; }},
      {"features.n_mels", "mel bands",
       [](Settings& s) -> Target { return &s.features.n_mels; }},
      {"features.n_mfcc", "cepstral coefficients kept",
       [](Settings& s) -> Target { return &s.features.n_mfcc; }},
      {"features.delta_width", "odd regression window of delta features",
       [](Settings& s) -> Target { return &s.features.delta_width; }},
      {"features.log_floor", "offset inside the logarithm of log-mel",
       [](Settings& s) -> Target { return &s.features.log_floor; }},
      {"features.standardize", "zero-mean unit-variance columns per file",
       [](Settings& s) -> Target { return &s.standardize; }},
      {"features.pcen.alpha", "PCEN gain exponent",
       [](Settings& s) -> Target { return &s.features.pcen.alpha; }},
      {"features.pcen.delta", "PCEN bias",
       [](Settings& s) -> Target { return &s.features.pcen.delta; }},
      {"features.pcen.r", "PCEN root compression",
       [](Settings& s) -> Target { return &s.features.pcen.r; }},
      {"features.pcen.smoothing", "PCEN smoother coefficient",
       [](Settings& s) -> Target { return &s.features.pcen.smoothing; }},
      {"features.pcen.epsilon", "PCEN stabiliser",
       [](Settings& s) -> Target { return &s.features.pcen.epsilon; }},

      {"network.channels", "output channels of the three blocks",
       [](Settings& s) -> Target { return &s.network.channels; }},
      {"network.leaky_slope", "leaky ReLU negative slope",
       [](Settings& s) -> Target { return &s.network.leaky_slope; }},
      {"network.bn_eps", "batch-norm epsilon",
       [](Settings& s) -> Target { return &s.network.bn_eps; }},
      {"network.bn_momentum", "batch-norm running-statistics momentum",
       [](Settings& s) -> Target { return &s.network.bn_momentum; }},

      {"train.n_way", "classes per episode (capped at the eligible classes)",
       [](Settings& s) -> Target { return &s.train.shape.n_way; }},
      {"train.k_shot", "support patches per class",
       [](Settings& s) -> Target { return &s.train.shape.k_shot; }},
      {"train.q_query", "query patches per class",
       [](Settings& s) -> Target { return &s.train.shape.q_query; }},
      {"train.episodes_per_epoch", "training episodes per epoch",
       [](Settings& s) -> Target { return &s.train.episodes_per_epoch; }},
      {"train.max_epochs", "upper bound on epochs",
       [](Settings& s) -> Target { return &s.train.max_epochs; }},
      {"train.validation_episodes", "fixed validation episodes per epoch",
       [](Settings& s) -> Target { return &s.train.validation_episodes; }},
      {"train.validation_fraction", "share of events held out for validation",
       [](Settings& s) -> Target { return &s.validation_fraction; }},
      {"train.patience", "epochs without a better validation accuracy before stopping",
       [](Settings& s) -> Target { return &s.train.patience; }},
      {"train.lr", "initial learning rate",
       [](Settings& s) -> Target { return &s.train.adam.base_lr; }},
      {"train.lr_decay", "learning-rate factor per decay interval",
       [](Settings& s) -> Target { return &s.train.adam.decay_gamma; }},
      {"train.lr_decay_epochs", "epochs per decay interval",
       [](Settings& s) -> Target { return &s.train.adam.decay_interval; }},
      {"train.adam_beta1", "Adam first-moment decay",
       [](Settings& s) -> Target { return &s.train.adam.beta1; }},
      {"train.adam_beta2", "Adam second-moment decay",
       [](Settings& s) -> Target { return &s.train.adam.beta2; }},
      {"train.adam_eps", "Adam denominator offset",
       [](Settings& s) -> Target { return &s.train.adam.eps; }},

      {"inference.n_shots", "labelled events used as support per file",
       [](Settings& s) -> Target { return &s.inference.n_shots; }},
      {"inference.neg_segments", "background patches per negative set",
       [](Settings& s) -> Target { return &s.inference.neg_segments_per_set; }},
      {"inference.negative_sets", "negative sets averaged per file",
       [](Settings& s) -> Target { return &s.inference.n_negative_sets; }},
      {"inference.hard_negative_sampling",
       "sample negative sets; false uses one prototype of all background",
       [](Settings& s) -> Target { return &s.inference.negative_hard_sampling; }},
      {"inference.threshold", "positive-probability threshold",
       [](Settings& s) -> Target { return &s.inference.prob_threshold; }},
      {"inference.min_event_frac", "minimum event length as a fraction of the mean shot",
       [](Settings& s) -> Target { return &s.inference.min_event_frac; }},
      {"inference.min_window_frames", "shortest query window (frames)",
       [](Settings& s) -> Target { return &s.inference.min_window_frames; }},
      {"inference.max_window_frames", "longest query window (frames)",
       [](Settings& s) -> Target { return &s.inference.max_window_frames; }},
      {"inference.transductive", "fine-tune on each file's shots before detecting",
       [](Settings& s) -> Target { return &s.inference.transductive; }},
      {"inference.adapt_steps", "fine-tuning steps per file",
       [](Settings& s) -> Target { return &s.inference.adapt_steps; }},
      {"inference.adapt_lr", "fine-tuning learning rate",
       [](Settings& s) -> Target { return &s.inference.adapt_lr; }},
      {"inference.adapt_negatives", "background patches per fine-tuning step",
       [](Settings& s) -> Target { return &s.inference.adapt_negatives; }},
      {"inference.target_class", "class column to detect when a file has several",
       [](Settings& s) -> Target { return &s.inference.target_class; }},

      {"eval.min_iou", "IoU needed for a prediction to match an event",
       [](Settings& s) -> Target { return &s.min_iou; }},
      {"eval.group_by", "report groups: subset | file",
       [](Settings& s) -> Target { return &s.group_by; }},
  };
  return kEntries;
}

const Entry* Find(std::string_view key) {
  for (const Entry& e : Registry()) {
    if (key == e.key) return &e;
  }
  return nullptr;
}

std::string TypeName(const Target& t) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, int> || std::is_same_v<T, uint64_t>) {
          return "int";
        } else if constexpr (std::is_same_v<T, double>) {
          return "number";
        } else if constexpr (std::is_same_v<T, bool>) {
          return "bool";
        } else if constexpr (std::is_same_v<T, std::array<int, 3>>) {
          return "int[3]";
        } else {
          return "string";
        }
      },
      t);
}

json Get(const Target& t) {
  return std::visit(
      [](auto* p) -> json {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, dsp::FeatureSet>) {
          return std::string(dsp::FeatureSetName(*p));
        } else if constexpr (std::is_same_v<T, protonet::Distance>) {
          return protonet::DistanceName(*p);
        } else {
          return *p;
        }
      },
      t);
}

void Set(const Target& t, const json& v, const std::string& key,
         const std::string& source) {
  auto fail = [&](const std::string& why) {
    throw UsageError(fmt::format("{}: key '{}': {}", source, key, why));
  };
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, int>) {
          if (!v.is_number_integer()) fail("expects an integer");
          const auto x = v.get<int64_t>();
          if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
            fail("integer out of range");
          }
          *p = static_cast<int>(x);
        } else if constexpr (std::is_same_v<T, uint64_t>) {
          if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                         v.get<int64_t>() < 0)) {
            fail("expects a non-negative integer");
          }
          *p = v.get<uint64_t>();
        } else if constexpr (std::is_same_v<T, double>) {
          if (!v.is_number()) fail("expects a number");
          *p = v.get<double>();
        } else if constexpr (std::is_same_v<T, bool>) {
          if (!v.is_boolean()) fail("expects true or false");
          *p = v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
          if (!v.is_string()) fail("expects a string");
          *p = v.get<std::string>();
        } else if constexpr (std::is_same_v<T, std::array<int, 3>>) {
          if (!v.is_array() || v.size() != 3) fail("expects an array of 3 integers");
          for (size_t i = 0; i < 3; ++i) {
            if (!v[i].is_number_integer()) fail("expects an array of 3 integers");
            (*p)[i] = v[i].get<int>();
          }
        } else {
          if (!v.is_string()) fail("expects a string");
          try {
            if constexpr (std::is_same_v<T, dsp::FeatureSet>) {
              *p = dsp::ParseFeatureSet(v.get<std::string>());
            } else {
              *p = protonet::ParseDistance(v.get<std::string>());
            }
          } catch (const Error& e) {
            fail(e.what());
          }
        }
      },
      t);
}

void Walk(Settings& s, const json& j, const std::string& prefix,
          const std::string& source) {
  if (!j.is_object()) {
    throw UsageError(fmt::format("{}: expected a JSON object{}", source,
                                 prefix.empty() ? "" : " at '" + prefix + "'"));
  }
  for (const auto& [name, value] : j.items()) {
    const std::string key = prefix.empty() ? name : prefix + "." + name;
    if (const Entry* e = Find(key)) {
      Set(e->bind(s), value, key, source);
    } else if (value.is_object()) {
      bool is_section = false;
      for (const Entry& r : Registry()) {
        if (std::string_view(r.key).rfind(key + ".", 0) == 0) is_section = true;
      }
      if (!is_section) {
        throw UsageError(fmt::format("{}: unknown config key '{}'", source, key));
      }
      Walk(s, value, key, source);
    } else {
      throw UsageError(fmt::format("{}: unknown config key '{}'", source, key));
    }
  }
}

json::json_pointer Pointer(std::string_view key) {
  std::string p = "/";
  for (char c : key) p += c == '.' ? '/' : c;
  return json::json_pointer(p);
}

}  // namespace

nlohmann::json SettingsToJsonObject(const Settings& s) {
  Settings copy = s;
  json j = json::object();
  for (const Entry& e : Registry()) j[Pointer(e.key)] = Get(e.bind(copy));
  return j;
}

void ApplyJson(Settings& s, const nlohmann::json& j, const std::string& source) {
  Walk(s, j, "", source);
}

void Settings::Validate() const {
  if (threads < 1) throw UsageError("config: threads must be >= 1");
  if (patch_frames < 8) {
    throw UsageError("config: patch_frames must be >= 8 (three 2x2 poolings)");
  }
  features.Validate();
  nn::NetworkConfig net = network;
  net.input_height = features.feature_dim();
  net.input_width = patch_frames;
  net.Validate();
  TrainConfigOf(*this).Validate();
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw UsageError("config: train.validation_fraction must lie in [0, 1)");
  }
  InferenceConfigOf(*this).Validate();
  if (!(min_iou > 0.0 && min_iou <= 1.0)) {
    throw UsageError("config: eval.min_iou must lie in (0, 1]");
  }
  if (group_by != "subset" && group_by != "file") {
    throw UsageError("config: eval.group_by must be subset or file");
  }
}

const std::vector<KeyDoc>& DescribeKeys() {
  static const std::vector<KeyDoc> kDocs = [] {
    std::vector<KeyDoc> out;
    Settings defaults;
    for (const Entry& e : Registry()) {
      const Target t = e.bind(defaults);
      out.push_back({e.key, TypeName(t), Get(t).dump(), e.help});
    }
    return out;
  }();
  return kDocs;
}

std::string FormatKeyHelp() {
  size_t width = 0;
  for (const KeyDoc& d : DescribeKeys()) width = std::max(width, d.key.size());
  std::string out;
  for (const KeyDoc& d : DescribeKeys()) {
    out += fmt::format("  {:<{}}  {:<7} {} (default {})\n", d.key, width, d.type,
                       d.help, d.default_value);
  }
  return out;
}

void ApplyJsonText(Settings& s, std::string_view json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw UsageError(fmt::format("{}: invalid JSON: {}", source, e.what()));
  }
  ApplyJson(s, j, source);
}

Settings LoadSettingsFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("{}: cannot open config file", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  Settings s;
  ApplyJsonText(s, ss.str(), path.string());
  return s;
}

void ApplyOverride(Settings& s, std::string_view key, std::string_view value) {
  const Entry* e = Find(key);
  if (e == nullptr) throw UsageError(fmt::format("unknown config key '{}'", key));
  json v = json::parse(value, nullptr, /*allow_exceptions=*/false);
  if (v.is_discarded()) v = std::string(value);
  Set(e->bind(s), v, std::string(key), "override");
}

std::string SettingsToJson(const Settings& s) {
  return SettingsToJsonObject(s).dump(2);
}

protonet::TrainConfig TrainConfigOf(const Settings& s) {
  protonet::TrainConfig t = s.train;
  t.network = s.network;
  t.network.input_height = s.features.feature_dim();
  t.network.input_width = s.patch_frames;
  t.distance = s.distance;
  t.seed = s.seed;
  t.threads = s.threads;
  return t;
}

inference::InferenceConfig InferenceConfigOf(const Settings& s) {
  inference::InferenceConfig c = s.inference;
  c.distance = s.distance;
  c.patch_frames = s.patch_frames;
  c.rng_seed = s.seed;
  c.threads = s.threads;
  return c;
}

std::string CheckpointMetadata(const Settings& s) {
  const json all = SettingsToJsonObject(s);
  json meta = json::object();
  meta["features"] = all["features"];
  meta["patch_frames"] = all["patch_frames"];
  meta["distance"] = all["distance"];
  return meta.dump();
}

void ApplyCheckpointMetadata(Settings& s, std::string_view metadata,
                             const std::string& source) {
  ApplyJsonText(s, metadata, source + " metadata");
}

}  // namespace fsbsed::experiment
