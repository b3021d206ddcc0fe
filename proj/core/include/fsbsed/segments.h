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

#ifndef FSBSED_SEGMENTS_H_
#define FSBSED_SEGMENTS_H_

#include <memory>
#include <vector>

#include "fsbsed/annotations.h"
#include "fsbsed/features.h"

namespace fsbsed::data {

// Default patch length: 17 frames, about 0.2 s at 22050 Hz with hop 256.
inline constexpr int kDefaultPatchFrames = 17;
inline constexpr int kBackgroundClass = -1;

enum class Polarity { kPositive, kNegative };

// Frame index whose centre is nearest to `seconds`.
int SecondsToFrame(double seconds, double hop_seconds);
double FrameToSeconds(int frame, double hop_seconds);

struct FrameSpan {
  int start = 0;
  int length = 0;
  int end() const { return start + length; }
};

// Frame span [start, end) covered by an annotated interval, clamped to the
// matrix. Always at least one frame unless the interval lies past the end.
FrameSpan EventFrames(double onset, double offset, double hop_seconds,
                      int total_frames);

// Patch windows covering [start, start + length): windows of patch_frames
// frames every max(1, patch_frames / 2) frames, plus one window ending at the
// span's end when the hop leaves a remainder. A span shorter than one patch
// yields a single window of the span's own length.
std::vector<FrameSpan> TileSpan(FrameSpan span, int patch_frames);

// A patch is a window into one of the pool's feature matrices. Windows
// shorter than the patch length are repeated cyclically on materialisation.
struct PatchRef {
  int source = 0;
  FrameSpan window;
  int class_index = kBackgroundClass;
  Polarity polarity = Polarity::kNegative;
  int event_id = -1;  // index into the source table's events, -1 if none
};

class SegmentPool {
 public:
  SegmentPool() = default;
  SegmentPool(int patch_frames, int dim) : patch_frames_(patch_frames), dim_(dim) {}

  int patch_frames() const { return patch_frames_; }
  int dim() const { return dim_; }
  size_t size() const { return patches_.size(); }
  bool empty() const { return patches_.empty(); }
  const PatchRef& operator[](size_t i) const { return patches_[i]; }
  const std::vector<PatchRef>& patches() const { return patches_; }
  const dsp::FeatureMatrix& source(int i) const { return *sources_[i]; }
  int source_count() const { return static_cast<int>(sources_.size()); }

  int AddSource(std::shared_ptr<const dsp::FeatureMatrix> features);
  size_t Add(const PatchRef& patch);
  // Appends another pool's sources and patches; returns the index offset of
  // the appended patches.
  size_t Append(const SegmentPool& other);

  std::vector<size_t> Select(int class_index, Polarity polarity) const;

  // patch_frames x dim (time major).
  dsp::Matrix Materialize(size_t i) const;
  // dim x patch_frames (feature major), the network input layout.
  void WriteFeatureMajor(size_t i, float* dst) const;
  void WriteFeatureMajor(size_t i, double* dst) const;

 private:
  int patch_frames_ = kDefaultPatchFrames;
  int dim_ = 0;
  std::vector<std::shared_ptr<const dsp::FeatureMatrix>> sources_;
  std::vector<PatchRef> patches_;
};

// Frames covered by any POS or UNK event of any class.
std::vector<bool> LabelledMask(const dsp::FeatureMatrix& features,
                               const AnnotationTable& table);

// Positive patches tile each POS event (class_index = column index in
// table.class_set); negative patches tile the complement of all POS and UNK
// intervals and carry kBackgroundClass.
SegmentPool ExtractPatches(std::shared_ptr<const dsp::FeatureMatrix> features,
                           const AnnotationTable& table, int patch_frames);

}  // namespace fsbsed::data

#endif  // FSBSED_SEGMENTS_H_
