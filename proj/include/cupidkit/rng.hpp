// Copyright 2026 The cupidkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not
// use this file except in compliance with the License.  You may obtain a copy
// of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.  See the
// License for the specific language governing permissions and limitations
// under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace cupidkit {

// Counter-based RNG. Every consumer derives a stream from (seed, name[,
// index]); the value sequence is a pure function of that key, so results do
// not depend on call interleaving or thread schedule. All randomness in the
// project flows through this; std:: distributions are implementation-defined
// and would break cross-run byte determinism.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0)
      : key_(mix(mix(seed ^ 0x2545F4914F6CDD1Dull) ^ fnv1a(name)) + index * kGolden) {}

  std::uint64_t next_u64() {
    counter_ += kGolden;
    return mix(key_ + counter_);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Multiplicative reduction; bias is O(2^-64).
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller (cosine branch only; always consumes two
  // uniforms so the counter advance is data-independent).
  double normal() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;        // [0,1)
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  // splitmix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ull;
    }
    return h;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace cupidkit
