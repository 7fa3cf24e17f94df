// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace protofuse {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

/// FNV-1a over the bytes of a name, so parameter init streams are keyed by name.
std::uint64_t hash_name(std::string_view name) noexcept;

// mt19937_64 output is fixed by the standard, but the std:: distributions
// are not, so the transforms below are spelled out to keep generated data
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  /// First `count` entries of a uniformly random permutation of [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count);

 private:
  std::mt19937_64 engine_;
};

/// Round a value to the nearest 32-bit float; parameters live on this grid.
inline double to_f32_grid(double v) noexcept { return static_cast<double>(static_cast<float>(v)); }

}  // namespace protofuse
