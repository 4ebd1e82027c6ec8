// Copyright 2026 The CAL Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Deterministic random number generation.
//
// Every stochastic routine in this library takes an explicit 64-bit seed and
// draws through the Rng wrapper below. The wrapper fixes the mapping from raw
// mt19937_64 output to uniform doubles and to categorical samples, so results
// are reproducible across standard library implementations (std::
// distributions make no such guarantee).

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace cal {

// splitmix64 finalizer. Good avalanche behavior, used to decorrelate seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// FNV-1a over bytes; used to hash stage labels into the seed fan-out.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Derives the seed for task `index` of a named pipeline stage from a single
// master seed. Two distinct (stage, index) pairs collide only by accident of
// the 64-bit hash, so independent stages never share a stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                                 std::uint64_t index = 0) {
  return splitmix64(master ^ fnv1a64(stage) ^ splitmix64(index));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform double in [0, 1), using the top 53 bits of one 64-bit draw.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t draw;
    do {
      draw = gen_();
    } while (draw >= limit);
    return static_cast<int>(draw % un);
  }

  // Samples an index proportionally to nonnegative weights via inverse CDF.
  // Accepts anything with operator()(int) and size(), e.g. Eigen vectors and
  // matrix row expressions.
  template <typename Vec>
  int categorical(const Vec& weights) {
    const int n = static_cast<int>(weights.size());
    if (n <= 0) throw std::invalid_argument("categorical: empty weights");
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = weights(i);
      if (w < 0.0) throw std::invalid_argument("categorical: negative weight");
      total += w;
    }
    if (total <= 0.0)
      throw std::invalid_argument("categorical: all weights zero");
    const double target = uniform() * total;
    double cum = 0.0;
    int last_positive = -1;
    for (int i = 0; i < n; ++i) {
      const double w = weights(i);
      if (w > 0.0) last_positive = i;
      cum += w;
      if (target < cum) return i;
    }
    // Float round-off can leave target marginally >= cum; fall back to the
    // last index with positive mass.
    return last_positive;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace cal
