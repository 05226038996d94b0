// spectroforge/rng.hpp

// Copyright 2026 The SpectroForge Authors
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

// Reproducible randomness. Every random draw in the toolkit flows through
// SplitMix64 so that other implementations can regenerate the same factors
// from (global_seed, utterance_id, copy_index):
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Uniform reals take the top 53 bits: u = (next() >> 11) * 2^-53, u in [0, 1).

#pragma once

#include <cstdint>
#include <string_view>

namespace spectroforge {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// The SplitMix64 finalizer applied to a single value.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }
  constexpr std::uint64_t operator()() noexcept { return next(); }

  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

  /// Uniform in [0, 1).
  constexpr double uniform01() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi]; returns lo exactly when lo == hi.
  constexpr double uniform(double lo, double hi) noexcept {
    const double u = uniform01();
    return lo == hi ? lo : lo + (hi - lo) * u;
  }

  /// Uniform integer in [lo, hi] (inclusive). Uses the multiply-shift
  /// reduction on the high 32 bits, which is unbiased enough for masking.
  constexpr std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) noexcept {
    const std::uint64_t span = hi - lo + 1;
    if (span == 0) return next();  // full 64-bit range
    return lo + static_cast<std::uint64_t>(uniform01() * static_cast<double>(span)) % span;
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// 64-bit FNV-1a over the UTF-8 bytes of `text`.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seed for one (utterance, copy) pair:
///   mix64(global_seed ^ mix64(fnv1a64(utterance_id) ^ (copy_index * kGoldenGamma)))
constexpr std::uint64_t utterance_seed(std::uint64_t global_seed, std::string_view utterance_id,
                                       std::uint64_t copy_index) noexcept {
  return mix64(global_seed ^ mix64(fnv1a64(utterance_id) ^ (copy_index * kGoldenGamma)));
}

/// Derives an independent sub-stream seed (per frame, or per purpose tag).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return mix64(seed ^ mix64(tag + kGoldenGamma));
}

}  // namespace spectroforge
