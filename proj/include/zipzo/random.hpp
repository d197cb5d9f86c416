// Copyright 2026 The zipzo Authors. All Rights Reserved.
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
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace zipzo {

// SplitMix64 finalizer. Every derived seed in the library goes through this.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// derive_seed(base, a, b, ...) = mix64(... mix64(mix64(base) ^ a) ^ b ...).
// Order matters; (1, 2) and (2, 1) give unrelated streams.
constexpr std::uint64_t derive_seed(std::uint64_t base) noexcept {
  return mix64(base);
}

template <class... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t next,
                                    Rest... rest) noexcept {
  return derive_seed(mix64(base) ^ next, static_cast<std::uint64_t>(rest)...);
}

// Domain tags keep independent consumers of one user seed apart.
namespace seed_tag {
inline constexpr std::uint64_t kPerturbation = 0x5045525455524231ULL;
inline constexpr std::uint64_t kBatches = 0x4241544348455331ULL;
inline constexpr std::uint64_t kInit = 0x494E495449414C31ULL;
inline constexpr std::uint64_t kProjection = 0x50524F4A45435431ULL;
inline constexpr std::uint64_t kObjective = 0x4F424A4543544931ULL;
inline constexpr std::uint64_t kVerify = 0x5645524946593031ULL;
}  // namespace seed_tag

// Deterministic random stream. std::mt19937_64 output is fixed by the
// standard; the distributions below are written out so that draws do not
// depend on the standard library implementation.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform_open_zero()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [0, n), rejection sampled. n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(out[i - 1], out[j]);
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace zipzo
