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

// Random projections that lift a per-token intrinsic vector (length q) into
// token-embedding space (length p).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "zipzo/errors.hpp"
#include "zipzo/random.hpp"

namespace zipzo {

constexpr bool is_power_of_two(std::size_t n) noexcept {
  return n != 0 && (n & (n - 1)) == 0;
}

constexpr std::size_t next_power_of_two(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Unnormalized fast Walsh-Hadamard transform, in place. Applying it twice
// multiplies the input by its length.
inline void walsh_hadamard_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  if (!is_power_of_two(n)) {
    throw ContractViolation("walsh_hadamard: length " + std::to_string(n) +
                            " is not a power of two");
  }
  for (std::size_t half = 1; half < n; half <<= 1) {
    for (std::size_t block = 0; block < n; block += 2 * half) {
      for (std::size_t i = block; i < block + half; ++i) {
        const double a = v[i];
        const double b = v[i + half];
        v[i] = a + b;
        v[i + half] = a - b;
      }
    }
  }
}

inline std::vector<double> walsh_hadamard(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  walsh_hadamard_inplace(out);
  return out;
}

// Structured projection M = scale * P_p * H * G * Pi * H * B * Z_q, where Z_q
// zero-pads a q-vector to p_pad, B is a random sign diagonal, H the
// Walsh-Hadamard matrix, Pi a random permutation, G a Gaussian diagonal and
// P_p keeps the first p rows. scale = 1 / sqrt(p * p_pad) makes
// E ||M v||^2 = ||v||^2 over the draw of G.
class FastfoodProjection {
 public:
  FastfoodProjection(std::uint64_t seed, std::size_t p, std::size_t q)
      : seed_(seed), p_(p), q_(q) {
    if (p == 0 || q == 0 || q > p) {
      throw InvalidDimensions("fastfood: need 1 <= q <= p, got p=" +
                              std::to_string(p) + " q=" + std::to_string(q));
    }
    padded_ = next_power_of_two(p);
    RngStream rng(derive_seed(seed, seed_tag::kProjection, 0));
    signs_.resize(padded_);
    for (auto& s : signs_) s = (rng.bits() >> 63) ? -1.0 : 1.0;
    permutation_ = rng.permutation(padded_);
    gaussian_.resize(padded_);
    for (auto& g : gaussian_) g = rng.normal();
    scale_ = 1.0 / std::sqrt(static_cast<double>(p_) *
                             static_cast<double>(padded_));
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t rows() const noexcept { return p_; }
  std::size_t cols() const noexcept { return q_; }
  std::size_t padded_size() const noexcept { return padded_; }
  const std::vector<double>& signs() const noexcept { return signs_; }
  const std::vector<std::size_t>& permutation() const noexcept {
    return permutation_;
  }
  const std::vector<double>& gaussian() const noexcept { return gaussian_; }
  double scale() const noexcept { return scale_; }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    if (static_cast<std::size_t>(v.size()) != q_) {
      throw InvalidDimensions("fastfood: input length " +
                              std::to_string(v.size()) + ", expected " +
                              std::to_string(q_));
    }
    std::vector<double> work(padded_, 0.0);
    for (std::size_t i = 0; i < q_; ++i) work[i] = signs_[i] * v[i];
    walsh_hadamard_inplace(work);
    std::vector<double> mixed(padded_);
    for (std::size_t i = 0; i < padded_; ++i) {
      mixed[i] = gaussian_[i] * work[permutation_[i]];
    }
    walsh_hadamard_inplace(mixed);
    Eigen::VectorXd out(p_);
    for (std::size_t i = 0; i < p_; ++i) out[i] = scale_ * mixed[i];
    return out;
  }

 private:
  std::uint64_t seed_;
  std::size_t p_;
  std::size_t q_;
  std::size_t padded_ = 0;
  std::vector<double> signs_;
  std::vector<std::size_t> permutation_;
  std::vector<double> gaussian_;
  double scale_ = 1.0;
};

inline FastfoodProjection build_fastfood(std::uint64_t seed, std::size_t p,
                                         std::size_t q) {
  return FastfoodProjection(seed, p, q);
}

// Dense Gaussian p x q reference projection, entries N(0, 1/p).
class DenseProjection {
 public:
  DenseProjection(std::uint64_t seed, std::size_t p, std::size_t q)
      : seed_(seed) {
    if (p == 0 || q == 0 || q > p) {
      throw InvalidDimensions("dense projection: need 1 <= q <= p");
    }
    RngStream rng(derive_seed(seed, seed_tag::kProjection, 1));
    const double sd = 1.0 / std::sqrt(static_cast<double>(p));
    entries_.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
      for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
        entries_(i, j) = sd * rng.normal();
      }
    }
  }

  // Explicit entries, used for hand-checked cases.
  explicit DenseProjection(Eigen::MatrixXd entries)
      : seed_(0), entries_(std::move(entries)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t rows() const noexcept {
    return static_cast<std::size_t>(entries_.rows());
  }
  std::size_t cols() const noexcept {
    return static_cast<std::size_t>(entries_.cols());
  }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    if (v.size() != entries_.cols()) {
      throw InvalidDimensions("dense projection: input length mismatch");
    }
    return entries_ * v;
  }

 private:
  std::uint64_t seed_;
  Eigen::MatrixXd entries_;
};

// p == q pass-through. Lets the reparameterized trainer run directly in
// prompt space.
class IdentityProjection {
 public:
  explicit IdentityProjection(std::size_t n) : n_(n) {}
  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return n_; }
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    if (static_cast<std::size_t>(v.size()) != n_) {
      throw InvalidDimensions("identity projection: input length mismatch");
    }
    return v;
  }

 private:
  std::size_t n_;
};

using TokenProjection =
    std::variant<FastfoodProjection, DenseProjection, IdentityProjection>;

enum class ProjectionKind { Fastfood, Dense, Identity };

inline std::string_view to_string(ProjectionKind k) noexcept {
  switch (k) {
    case ProjectionKind::Fastfood: return "fastfood";
    case ProjectionKind::Dense: return "dense";
    case ProjectionKind::Identity: return "identity";
  }
  return "?";
}

inline ProjectionKind parse_projection_kind(std::string_view s) {
  for (auto k : {ProjectionKind::Fastfood, ProjectionKind::Dense,
                 ProjectionKind::Identity}) {
    if (s == to_string(k)) return k;
  }
  throw InvalidDimensions("unknown projection kind '" + std::string(s) + "'");
}

inline Eigen::VectorXd project(const TokenProjection& proj,
                               const Eigen::Ref<const Eigen::VectorXd>& v) {
  return std::visit([&](const auto& m) { return m.apply(v); }, proj);
}

inline std::size_t projection_rows(const TokenProjection& proj) {
  return std::visit([](const auto& m) { return m.rows(); }, proj);
}

inline std::size_t projection_cols(const TokenProjection& proj) {
  return std::visit([](const auto& m) { return m.cols(); }, proj);
}

// Seed of token i's projection: derive_seed(base, kProjection, i).
inline std::uint64_t token_seed(std::uint64_t base_seed, std::size_t token) {
  return derive_seed(base_seed, seed_tag::kProjection, token);
}

inline std::vector<TokenProjection> make_token_projections(
    ProjectionKind kind, std::uint64_t base_seed, std::size_t p, std::size_t q,
    std::size_t m) {
  std::vector<TokenProjection> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    switch (kind) {
      case ProjectionKind::Fastfood:
        out.emplace_back(FastfoodProjection(token_seed(base_seed, i), p, q));
        break;
      case ProjectionKind::Dense:
        out.emplace_back(DenseProjection(token_seed(base_seed, i), p, q));
        break;
      case ProjectionKind::Identity:
        if (p != q) {
          throw InvalidDimensions("identity projection requires p == q");
        }
        out.emplace_back(IdentityProjection(p));
        break;
    }
  }
  return out;
}

}  // namespace zipzo
