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

#include "fsbsed/segments.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace fsbsed::data {
namespace {

template <typename S>
void WriteFeatureMajorImpl(const SegmentPool& pool, size_t i, S* dst) {
  const PatchRef& p = pool[i];
  const dsp::FeatureMatrix& src = pool.source(p.source);
  const int t_len = pool.patch_frames();
  const int dim = pool.dim();
  for (int t = 0; t < t_len; ++t) {
    const int frame = p.window.start + t % p.window.length;
    const double* row = src.values.row(frame).data();
    for (int f = 0; f < dim; ++f) dst[f * t_len + t] = static_cast<S>(row[f]);
  }
}

}  // namespace

int SecondsToFrame(double seconds, double hop_seconds) {
  return static_cast<int>(std::lround(seconds / hop_seconds));
}

double FrameToSeconds(int frame, double hop_seconds) {
  return frame * hop_seconds;
}

FrameSpan EventFrames(double onset, double offset, double hop_seconds,
                      int total_frames) {
  int start = std::clamp(SecondsToFrame(onset, hop_seconds), 0, total_frames);
  int end = std::clamp(SecondsToFrame(offset, hop_seconds), 0, total_frames);
  if (start >= total_frames) return {total_frames, 0};
  end = std::max(end, start + 1);
  return {start, end - start};
}

std::vector<FrameSpan> TileSpan(FrameSpan span, int patch_frames) {
  std::vector<FrameSpan> out;
  if (span.length <= 0) return out;
  if (span.length <= patch_frames) {
    out.push_back({span.start, std::min(span.length, patch_frames)});
    return out;
  }
  const int hop = std::max(1, patch_frames / 2);
  for (int s = span.start; s + patch_frames <= span.end(); s += hop) {
    out.push_back({s, patch_frames});
  }
  // The tail is covered by one extra window aligned to the end.
  if (out.back().end() < span.end()) out.push_back({span.end() - patch_frames, patch_frames});
  return out;
}

int SegmentPool::AddSource(std::shared_ptr<const dsp::FeatureMatrix> features) {
  if (dim_ == 0) dim_ = features->dim();
  if (features->dim() != dim_) {
    throw DataError(fmt::format(
        "segment pool: feature dim {} does not match pool dim {}",
        features->dim(), dim_));
  }
  sources_.push_back(std::move(features));
  return static_cast<int>(sources_.size()) - 1;
}

size_t SegmentPool::Add(const PatchRef& patch) {
  if (patch.source < 0 || patch.source >= source_count()) {
    throw InternalError("segment pool: patch refers to unknown source");
  }
  const int frames = sources_[patch.source]->frames();
  if (patch.window.length < 1 || patch.window.length > patch_frames_ ||
      patch.window.start < 0 || patch.window.end() > frames) {
    throw InternalError(fmt::format(
        "segment pool: window [{}, {}) invalid for {} frames, patch {}",
        patch.window.start, patch.window.end(), frames, patch_frames_));
  }
  patches_.push_back(patch);
  return patches_.size() - 1;
}

size_t SegmentPool::Append(const SegmentPool& other) {
  if (other.empty() && other.sources_.empty()) return patches_.size();
  if (dim_ == 0) dim_ = other.dim_;
  if (other.patch_frames_ != patch_frames_ || other.dim_ != dim_) {
    throw DataError(fmt::format(
        "segment pool: cannot merge {}x{} patches into a {}x{} pool",
        other.patch_frames_, other.dim_, patch_frames_, dim_));
  }
  const int source_offset = source_count();
  const size_t patch_offset = patches_.size();
  sources_.insert(sources_.end(), other.sources_.begin(), other.sources_.end());
  for (PatchRef p : other.patches_) {
    p.source += source_offset;
    patches_.push_back(p);
  }
  return patch_offset;
}

std::vector<size_t> SegmentPool::Select(int class_index,
                                        Polarity polarity) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < patches_.size(); ++i) {
    if (patches_[i].class_index == class_index &&
        patches_[i].polarity == polarity) {
      out.push_back(i);
    }
  }
  return out;
}

dsp::Matrix SegmentPool::Materialize(size_t i) const {
  const PatchRef& p = patches_.at(i);
  const dsp::FeatureMatrix& src = *sources_[p.source];
  dsp::Matrix out(patch_frames_, dim_);
  for (int t = 0; t < patch_frames_; ++t) {
    out.row(t) = src.values.row(p.window.start + t % p.window.length);
  }
  return out;
}

void SegmentPool::WriteFeatureMajor(size_t i, float* dst) const {
  WriteFeatureMajorImpl(*this, i, dst);
}

void SegmentPool::WriteFeatureMajor(size_t i, double* dst) const {
  WriteFeatureMajorImpl(*this, i, dst);
}

std::vector<bool> LabelledMask(const dsp::FeatureMatrix& features,
                               const AnnotationTable& table) {
  std::vector<bool> mask(features.frames(), false);
  for (const auto& e : table.events) {
    if (e.value == Label::kNeg) continue;
    const FrameSpan span = EventFrames(e.onset, e.offset,
                                       features.frame_hop_seconds,
                                       features.frames());
    for (int t = span.start; t < span.end(); ++t) mask[t] = true;
  }
  return mask;
}

SegmentPool ExtractPatches(std::shared_ptr<const dsp::FeatureMatrix> features,
                           const AnnotationTable& table, int patch_frames) {
  if (patch_frames < 1) {
    throw UsageError(
        fmt::format("extract patches: patch_frames {} must be >= 1",
                    patch_frames));
  }
  SegmentPool pool(patch_frames, features->dim());
  const int source = pool.AddSource(features);
  const int total = features->frames();
  const double hop = features->frame_hop_seconds;

  for (size_t id = 0; id < table.events.size(); ++id) {
    const AnnotatedEvent& e = table.events[id];
    if (e.value != Label::kPos) continue;
    const FrameSpan span = EventFrames(e.onset, e.offset, hop, total);
    for (const FrameSpan& w : TileSpan(span, patch_frames)) {
      pool.Add({source, w, table.ClassIndex(e.class_name), Polarity::kPositive,
                static_cast<int>(id)});
    }
  }

  const std::vector<bool> mask = LabelledMask(*features, table);
  int t = 0;
  while (t < total) {
    if (mask[t]) {
      ++t;
      continue;
    }
    int end = t;
    while (end < total && !mask[end]) ++end;
    for (const FrameSpan& w : TileSpan({t, end - t}, patch_frames)) {
      pool.Add({source, w, kBackgroundClass, Polarity::kNegative, -1});
    }
    t = end;
  }
  return pool;
}

}  // namespace fsbsed::data
