// Copyright 2026 The Procure Authors
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

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace procure {

/// SplitMix64 generator. Chosen over the standard-library engines because its
/// output is identical on every platform and it splits into independent
/// streams by key, which the benchmark harness relies on for reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ kSeedTag)) {}

  /// Derives a stream keyed by (seed, path...). Streams with distinct paths
  /// are independent for all practical purposes.
  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    Rng rng(seed);
    for (std::uint64_t p : path) rng.state_ = mix(rng.state_ ^ mix(p ^ kStreamTag));
    return rng;
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, one value per two uniforms; no cached spare so the stream
  // position is a pure function of the number of calls.
  double normal(double mu, double sigma) {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return mu + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential(double mean) { return -mean * std::log(1.0 - uniform()); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kSeedTag = 0x8A5EEDDEADBEEFull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t kStreamTag = 0xA5A5A5A55A5A5A5Aull;

  std::uint64_t state_;
};

}  // namespace procure
