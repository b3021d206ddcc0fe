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

#ifndef FSBSED_EPISODE_H_
#define FSBSED_EPISODE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fsbsed/segments.h"

namespace fsbsed::data {

// All patches of a corpus plus, per class, the positive patches of that class
// and the background patches of the recordings it occurs in.
struct ClassPools {
  SegmentPool pool;
  std::vector<std::string> class_names;
  std::vector<std::vector<size_t>> positives;
  std::vector<std::vector<size_t>> negatives;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

struct EpisodeItem {
  size_t patch = 0;  // index into ClassPools::pool
  int label = 0;     // position of the class within Episode::classes
};

// One N-way K-shot task. Items are stored class-major: support[n * K + k],
// query[n * Q + q], negative_support[n * K + k].
struct Episode {
  int n_way = 0;
  int k_shot = 0;
  int q_query = 0;
  std::vector<int> classes;  // global class ids, size n_way
  std::vector<EpisodeItem> support;
  std::vector<EpisodeItem> query;
  std::vector<EpisodeItem> negative_support;
};

struct EpisodeShape {
  int n_way = 10;
  int k_shot = 5;
  int q_query = 5;
};

class CapacityError : public DataError {
 public:
  explicit CapacityError(const std::string& what) : DataError(what) {}
};

// Classes with at least K + Q positive and K negative patches.
std::vector<int> EligibleClasses(const ClassPools& pools,
                                 const EpisodeShape& shape);

// Uniform class sampling without replacement, then uniform patch sampling
// without replacement inside each class. Deterministic given `seed`.
Episode SampleEpisode(const ClassPools& pools, const EpisodeShape& shape,
                      uint64_t seed);

}  // namespace fsbsed::data

#endif  // FSBSED_EPISODE_H_
