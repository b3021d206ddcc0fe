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

#include "fsbsed/dataset.h"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "fsbsed/audio.h"
#include "fsbsed/parallel.h"
#include "fsbsed/seed.h"

namespace fsbsed::data {
namespace fs = std::filesystem;

std::string RecordingEntry::id() const {
  const std::string name = wav.filename().string();
  return subset.empty() ? name : subset + "/" + name;
}

std::vector<RecordingEntry> ScanDatasetRoot(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw DataError(
        fmt::format("dataset root '{}' does not exist or is not a directory",
                    root.string()));
  }
  std::vector<RecordingEntry> out;
  auto scan_dir = [&](const fs::path& dir, const std::string& subset) {
    for (const auto& item : fs::directory_iterator(dir)) {
      if (!item.is_regular_file()) continue;
      const fs::path& p = item.path();
      std::string ext = p.extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
      if (ext != ".wav") continue;
      fs::path csv = p;
      csv.replace_extension(".csv");
      if (!fs::exists(csv)) continue;
      out.push_back({p, csv, subset});
    }
  };
  scan_dir(root, "");
  for (const auto& item : fs::directory_iterator(root)) {
    if (item.is_directory()) {
      scan_dir(item.path(), item.path().filename().string());
    }
  }
  if (out.empty()) {
    throw DataError(fmt::format(
        "dataset root '{}' contains no <subset>/<name>.wav files with a "
        "sibling <name>.csv annotation",
        root.string()));
  }
  std::sort(out.begin(), out.end(),
            [](const RecordingEntry& a, const RecordingEntry& b) {
              return a.id() < b.id();
            });
  return out;
}

Recording LoadRecording(const RecordingEntry& entry,
                        const dsp::FeatureConfig& cfg, bool standardize) {
  Recording rec;
  rec.entry = entry;
  rec.table = ParseAnnotations(entry.csv);
  audio::AudioClip clip = audio::DecodeWav(entry.wav);
  if (clip.sample_rate != cfg.sample_rate) {
    clip = audio::Resample(clip, cfg.sample_rate);
  }
  rec.duration_seconds = clip.duration_seconds();
  const double hop_seconds =
      static_cast<double>(cfg.hop_len) / cfg.sample_rate;
  rec.table.CheckWithin(rec.duration_seconds, hop_seconds);
  auto features =
      std::make_shared<dsp::FeatureMatrix>(dsp::BuildFeatures(clip, cfg));
  if (standardize) dsp::StandardizeColumns(*features);
  rec.features = std::move(features);
  return rec;
}

std::vector<Recording> LoadRecordings(const std::vector<RecordingEntry>& entries,
                                      const dsp::FeatureConfig& cfg,
                                      bool standardize, int threads) {
  std::vector<Recording> out(entries.size());
  ParallelFor(entries.size(), threads, [&](size_t i) {
    out[i] = LoadRecording(entries[i], cfg, standardize);
  });
  return out;
}

CorpusPools BuildClassPools(const std::vector<Recording>& recordings,
                            int patch_frames, double validation_fraction,
                            uint64_t seed) {
  if (recordings.empty()) throw DataError("no recordings to build pools from");
  const int dim = recordings.front().features->dim();
  CorpusPools out;
  out.train.pool = SegmentPool(patch_frames, dim);
  out.validation.pool = SegmentPool(patch_frames, dim);

  std::map<std::string, int> class_ids;
  for (const Recording& rec : recordings) {
    for (const auto& e : rec.table.events) {
      if (e.value == Label::kPos && !class_ids.count(e.class_name)) {
        const int id = static_cast<int>(class_ids.size());
        class_ids.emplace(e.class_name, id);
      }
    }
  }
  // Ids in order of first appearance; names listed by id.
  std::vector<std::string> names(class_ids.size());
  for (const auto& [name, id] : class_ids) names[id] = name;
  for (ClassPools* side : {&out.train, &out.validation}) {
    side->class_names = names;
    side->positives.assign(names.size(), {});
    side->negatives.assign(names.size(), {});
  }

  for (const Recording& rec : recordings) {
    if (rec.features->dim() != dim) {
      throw DataError(fmt::format("{}: feature dim {} differs from {}",
                                  rec.entry.id(), rec.features->dim(), dim));
    }
    const SegmentPool local =
        ExtractPatches(rec.features, rec.table, patch_frames);
    std::vector<int> present;
    for (const auto& e : rec.table.events) {
      if (e.value != Label::kPos) continue;
      const int id = class_ids.at(e.class_name);
      if (std::find(present.begin(), present.end(), id) == present.end()) {
        present.push_back(id);
      }
    }

    auto is_validation = [&](const PatchRef& p) {
      if (validation_fraction <= 0.0) return false;
      const uint64_t h =
          p.polarity == Polarity::kPositive
              ? DeriveSeed(seed, rec.entry.id(), "event",
                           static_cast<uint64_t>(p.event_id))
              : DeriveSeed(seed, rec.entry.id(), "background",
                           static_cast<uint64_t>(p.window.start));
      return (h >> 11) * 0x1.0p-53 < validation_fraction;
    };

    for (ClassPools* side : {&out.train, &out.validation}) {
      const bool want_validation = side == &out.validation;
      const int source = side->pool.AddSource(rec.features);
      for (const PatchRef& local_patch : local.patches()) {
        if (is_validation(local_patch) != want_validation) continue;
        PatchRef p = local_patch;
        p.source = source;
        if (p.polarity == Polarity::kPositive) {
          p.class_index =
              class_ids.at(rec.table.class_set[local_patch.class_index]);
          side->positives[p.class_index].push_back(side->pool.Add(p));
        } else {
          const size_t idx = side->pool.Add(p);
          for (int c : present) side->negatives[c].push_back(idx);
        }
      }
    }
  }
  return out;
}

}  // namespace fsbsed::data
