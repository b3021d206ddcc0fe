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

#include "fsbsed/episode.h"

#include <fmt/format.h>

#include "fsbsed/seed.h"

namespace fsbsed::data {

std::vector<int> EligibleClasses(const ClassPools& pools,
                                 const EpisodeShape& shape) {
  std::vector<int> out;
  for (int c = 0; c < pools.num_classes(); ++c) {
    if (static_cast<int>(pools.positives[c].size()) >=
            shape.k_shot + shape.q_query &&
        static_cast<int>(pools.negatives[c].size()) >= shape.k_shot) {
      out.push_back(c);
    }
  }
  return out;
}

Episode SampleEpisode(const ClassPools& pools, const EpisodeShape& shape,
                      uint64_t seed) {
  if (shape.n_way < 1 || shape.k_shot < 1 || shape.q_query < 1) {
    throw UsageError(fmt::format("episode: invalid shape {}-way {}-shot {}-query",
                                 shape.n_way, shape.k_shot, shape.q_query));
  }
  const std::vector<int> eligible = EligibleClasses(pools, shape);
  if (static_cast<int>(eligible.size()) < shape.n_way) {
    throw CapacityError(fmt::format(
        "episode: {}-way {}-shot {}-query needs {} classes with >= {} positive "
        "and >= {} negative patches; only {} of {} qualify",
        shape.n_way, shape.k_shot, shape.q_query, shape.n_way,
        shape.k_shot + shape.q_query, shape.k_shot, eligible.size(),
        pools.num_classes()));
  }

  Rng rng(seed);
  Episode ep;
  ep.n_way = shape.n_way;
  ep.k_shot = shape.k_shot;
  ep.q_query = shape.q_query;
  for (size_t i : SampleWithoutReplacement(rng, eligible.size(), shape.n_way)) {
    ep.classes.push_back(eligible[i]);
  }
  for (int n = 0; n < shape.n_way; ++n) {
    const auto& pos = pools.positives[ep.classes[n]];
    const auto picked =
        SampleWithoutReplacement(rng, pos.size(), shape.k_shot + shape.q_query);
    for (int k = 0; k < shape.k_shot; ++k) {
      ep.support.push_back({pos[picked[k]], n});
    }
    for (int q = 0; q < shape.q_query; ++q) {
      ep.query.push_back({pos[picked[shape.k_shot + q]], n});
    }
    const auto& neg = pools.negatives[ep.classes[n]];
    for (size_t i : SampleWithoutReplacement(rng, neg.size(), shape.k_shot)) {
      ep.negative_support.push_back({neg[i], n});
    }
  }
  return ep;
}

}  // namespace fsbsed::data
