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

#ifndef FSBSED_INFERENCE_H_
#define FSBSED_INFERENCE_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fsbsed/annotations.h"
#include "fsbsed/features.h"
#include "fsbsed/network.h"
#include "fsbsed/protonet.h"
#include "fsbsed/segments.h"

namespace fsbsed::inference {

struct InferenceConfig {
  int n_shots = 5;
  int neg_segments_per_set = 150;
  int n_negative_sets = 3;
  // Off: a single negative prototype from every background patch.
  bool negative_hard_sampling = true;
  double prob_threshold = 0.5;
  double min_event_frac = 0.6;  // of the mean shot duration
  int patch_frames = data::kDefaultPatchFrames;
  // Query windows last the mean shot duration clamped to these bounds.
  int min_window_frames = data::kDefaultPatchFrames;
  int max_window_frames = 8 * data::kDefaultPatchFrames;
  protonet::Distance distance = protonet::Distance::kSquaredEuclidean;

  bool transductive = false;
  int adapt_steps = 20;
  double adapt_lr = 1e-4;
  int adapt_negatives = 20;  // background patches per adaptation step

  uint64_t rng_seed = 0;
  std::string target_class;  // empty: the table's only class
  int threads = 1;

  void Validate() const;
};

struct Event {
  double onset = 0.0;
  double offset = 0.0;
  bool operator==(const Event&) const = default;
};

struct EventList {
  std::string file;
  std::vector<Event> events;  // sorted, disjoint, onset < offset
};

// Sorts, joins events that overlap or touch, then drops those shorter than
// `min_duration`. Idempotent.
std::vector<Event> MergeEvents(std::vector<Event> events, double min_duration);

// Per-window arithmetic mean of the members' probabilities.
std::vector<double> EnsembleAverage(const std::vector<std::vector<double>>& members);

// Everything about one file that does not depend on which negatives are
// drawn: embeddings of the shots, query windows and background pool.
struct PreparedFile {
  std::string file;
  std::string target_class;
  double hop_seconds = 0.0;
  double mean_shot_seconds = 0.0;
  double query_start_seconds = 0.0;  // offset of the last shot
  int window_frames = 0;
  std::vector<data::FrameSpan> windows;
  protonet::Matrix shots;      // n_shots x D, each the mean of its patches
  protonet::Matrix queries;    // windows x D
  protonet::Matrix negatives;  // background patches x D

  protonet::Vector positive_prototype() const;
};

// First n_shots POS events of the target class, sorted by onset.
std::vector<data::AnnotatedEvent> SelectShots(const data::AnnotationTable& table,
                                              const InferenceConfig& cfg,
                                              std::string* target_class = nullptr);

// The part of a file's annotation the detector may use: its shots, plus UNK
// intervals of the target class that end by the last shot. Later events are
// ground truth and must not shape the background pool.
data::AnnotationTable VisibleAnnotations(const data::AnnotationTable& table,
                                         const InferenceConfig& cfg);

PreparedFile PrepareFile(const nn::EmbeddingNetwork<float>& net,
                         std::shared_ptr<const dsp::FeatureMatrix> features,
                         const data::AnnotationTable& table,
                         const std::string& file_id, const InferenceConfig& cfg);

// Seed of negative set `set_index` of `count` segments for a file. Depends
// on neither the model nor the trial beyond rng_seed, so compared models
// share the same sets.
uint64_t NegativeSetSeed(uint64_t rng_seed, const std::string& file, int count,
                         int set_index);

// Positive probability per query window, averaged over the negative sets.
std::vector<double> WindowProbabilities(const PreparedFile& prepared,
                                        const InferenceConfig& cfg);

// Thresholds, merges consecutive positive windows and filters short events.
EventList PostProcess(const PreparedFile& prepared,
                      const std::vector<double>& probabilities,
                      const InferenceConfig& cfg);

// Fine-tunes a copy of `net` on the file's shots against its own background.
nn::EmbeddingNetwork<float> TransductiveAdapt(
    const nn::EmbeddingNetwork<float>& net,
    std::shared_ptr<const dsp::FeatureMatrix> features,
    const data::AnnotationTable& table, const std::string& file_id,
    const InferenceConfig& cfg);

// Full pipeline for one file; adapts first when cfg.transductive is set.
EventList DetectFile(const nn::EmbeddingNetwork<float>& net,
                     std::shared_ptr<const dsp::FeatureMatrix> features,
                     const data::AnnotationTable& table,
                     const std::string& file_id, const InferenceConfig& cfg);

// DCASE submission layout: Audiofilename,Starttime,Endtime.
void WritePredictions(const std::filesystem::path& path,
                      const std::vector<EventList>& lists);
std::vector<EventList> ReadPredictions(const std::filesystem::path& path);

}  // namespace fsbsed::inference

#endif  // FSBSED_INFERENCE_H_
