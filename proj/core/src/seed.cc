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

#include "fsbsed/seed.h"

#include <numeric>
#include <stdexcept>

namespace fsbsed {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SeedHasher& SeedHasher::Add(uint64_t value) {
  // Mix the whole word first so that small integers spread over all bits.
  state_ ^= SplitMix64(value);
  state_ *= 0x100000001b3ULL;
  state_ = SplitMix64(state_);
  return *this;
}

SeedHasher& SeedHasher::Add(std::string_view text) {
  // FNV-1a over the bytes, then a length word as separator.
  for (unsigned char c : text) {
    state_ ^= c;
    state_ *= 0x100000001b3ULL;
  }
  return Add(static_cast<uint64_t>(text.size()));
}

uint64_t SeedHasher::Finish() const { return SplitMix64(state_); }

uint64_t UniformBelow(Rng& rng, uint64_t n) {
  if (n == 0) throw std::invalid_argument("UniformBelow: empty range");
  const uint64_t limit = Rng::max() - Rng::max() % n;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<size_t> SampleWithoutReplacement(Rng& rng, size_t n, size_t k) {
  if (k > n) {
    throw std::invalid_argument("SampleWithoutReplacement: k exceeds n");
  }
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + static_cast<size_t>(UniformBelow(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace fsbsed
