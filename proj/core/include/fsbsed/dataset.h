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

#ifndef FSBSED_DATASET_H_
#define FSBSED_DATASET_H_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fsbsed/annotations.h"
#include "fsbsed/episode.h"
#include "fsbsed/features.h"

namespace fsbsed::data {

// A recording under a dataset root: <root>/<subset>/<name>.wav with the
// annotation at <root>/<subset>/<name>.csv. Files directly under the root
// get an empty subset.
struct RecordingEntry {
  std::filesystem::path wav;
  std::filesystem::path csv;
  std::string subset;

  // "<subset>/<name>.wav", or "<name>.wav" without a subset.
  std::string id() const;
};

// Sorted by id. Throws DataError if the root is missing or holds no
// annotated recordings.
std::vector<RecordingEntry> ScanDatasetRoot(const std::filesystem::path& root);

struct Recording {
  RecordingEntry entry;
  AnnotationTable table;
  std::shared_ptr<const dsp::FeatureMatrix> features;
  double duration_seconds = 0.0;
};

// Decodes, resamples to cfg.sample_rate, extracts features and (optionally)
// standardises every feature column over the file.
Recording LoadRecording(const RecordingEntry& entry,
                        const dsp::FeatureConfig& cfg, bool standardize);

std::vector<Recording> LoadRecordings(const std::vector<RecordingEntry>& entries,
                                      const dsp::FeatureConfig& cfg,
                                      bool standardize, int threads);

struct CorpusPools {
  ClassPools train;
  ClassPools validation;
};

// Builds per-class pools over all recordings, keyed by class name. Whole POS
// events (and background patches) are assigned to the validation side with
// probability `validation_fraction`, decided by a hash of `seed`, the
// recording and the event, so no event contributes to both sides.
CorpusPools BuildClassPools(const std::vector<Recording>& recordings,
                            int patch_frames, double validation_fraction,
                            uint64_t seed);

}  // namespace fsbsed::data

#endif  // FSBSED_DATASET_H_
