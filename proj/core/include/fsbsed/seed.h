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

#ifndef FSBSED_SEED_H_
#define FSBSED_SEED_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fsbsed {

// Stable 64-bit seed derivation. Unlike std::hash the result is identical
// across runs, platforms and standard libraries.
class SeedHasher {
 public:
  SeedHasher() = default;
  explicit SeedHasher(uint64_t base) { Add(base); }

  SeedHasher& Add(uint64_t value);
  SeedHasher& Add(std::string_view text);

  uint64_t Finish() const;

 private:
  uint64_t state_ = 0xcbf29ce484222325ULL;
};

uint64_t SplitMix64(uint64_t x);

// Convenience: DeriveSeed(base, "run-a", 3).
template <typename... Parts>
uint64_t DeriveSeed(uint64_t base, const Parts&... parts) {
  SeedHasher h(base);
  (h.Add(parts), ...);
  return h.Finish();
}

using Rng = std::mt19937_64;

// Uniform integer in [0, n) by rejection; unlike std::uniform_int_distribution
// the sequence is the same on every standard library.
uint64_t UniformBelow(Rng& rng, uint64_t n);

// Uniform double in [0, 1) with 53 random bits.
double UniformUnit(Rng& rng);

// k distinct indices from [0, n), in sampled order (partial Fisher-Yates).
std::vector<size_t> SampleWithoutReplacement(Rng& rng, size_t n, size_t k);

}  // namespace fsbsed

#endif  // FSBSED_SEED_H_
