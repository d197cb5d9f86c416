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

// Intrinsic-dimensional prompt parameterization.
//
// A prompt of m tokens, each of width p, is driven by a q x m matrix
//   Xi = U diag(s) V^T + u 1^T
// with U (q x r), s (r), V (m x r) and a shared vector u (q). Column i of Xi
// is lifted into token space by that token's projection and added to the
// frozen base embedding: theta_i = theta0_i + M_i Xi_i.
//
// Flat layout (the vector the optimizer perturbs), in order:
//   U column-major, s (when trainable), V column-major, u (when trainable).
// The Standard variant stores Xi itself, column-major.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "zipzo/errors.hpp"
#include "zipzo/random.hpp"
#include "zipzo/text.hpp"
#include "zipzo/transforms.hpp"

namespace zipzo {

enum class VariantKind {
  Standard,      // direct per-token vectors, delta = q m
  LowRank,       // U V^T, delta = r (q + m)
  LowRankShare,  // U V^T + u 1^T, delta = r (q + m) + q
  LowRankDiag,   // U diag(s) V^T, delta = r (q + m + 1)
  Zip,           // U diag(s) V^T + u 1^T, delta = r (q + m + 1) + q
};

inline constexpr bool has_diagonal(VariantKind v) noexcept {
  return v == VariantKind::LowRankDiag || v == VariantKind::Zip;
}

inline constexpr bool has_sharing(VariantKind v) noexcept {
  return v == VariantKind::LowRankShare || v == VariantKind::Zip;
}

inline std::string_view to_string(VariantKind v) noexcept {
  switch (v) {
    case VariantKind::Standard: return "standard";
    case VariantKind::LowRank: return "lowrank";
    case VariantKind::LowRankShare: return "lowrank-share";
    case VariantKind::LowRankDiag: return "lowrank-diag";
    case VariantKind::Zip: return "zip";
  }
  return "?";
}

inline VariantKind parse_variant(std::string_view s) {
  for (auto v : {VariantKind::Standard, VariantKind::LowRank,
                 VariantKind::LowRankShare, VariantKind::LowRankDiag,
                 VariantKind::Zip}) {
    if (to_string(v) == s) return v;
  }
  throw InvalidShape("unknown variant '" + std::string(s) + "'");
}

// p: token width, m: token count, q: per-token intrinsic width, r: rank.
struct PromptShape {
  std::size_t p = 0;
  std::size_t m = 0;
  std::size_t q = 0;
  std::size_t r = 0;

  // q = floor(d' / m); leftover intrinsic dimensions are dropped.
  static PromptShape from_intrinsic_dim(std::size_t p, std::size_t m,
                                        std::size_t intrinsic_dim,
                                        std::size_t r) {
    if (m == 0) throw InvalidShape("prompt shape: m must be >= 1");
    PromptShape s{p, m, intrinsic_dim / m, r};
    s.validate();
    return s;
  }

  std::size_t full_dim() const noexcept { return p * m; }

  void validate() const {
    if (p < 1 || m < 1 || q < 1) {
      throw InvalidShape("prompt shape: p, m, q must all be >= 1");
    }
    if (r < 1 || r > std::min(q, m)) {
      throw InvalidShape("prompt shape: rank " + std::to_string(r) +
                         " outside [1, min(q, m)] = [1, " +
                         std::to_string(std::min(q, m)) + "]");
    }
    if (q > p) throw InvalidShape("prompt shape: q must not exceed p");
  }

  friend bool operator==(const PromptShape&, const PromptShape&) = default;
};

inline std::size_t delta(const PromptShape& shape, VariantKind variant) {
  const std::size_t q = shape.q, m = shape.m, r = shape.r;
  switch (variant) {
    case VariantKind::Standard: return q * m;
    case VariantKind::LowRank: return r * (q + m);
    case VariantKind::LowRankShare: return r * (q + m) + q;
    case VariantKind::LowRankDiag: return r * (q + m + 1);
    case VariantKind::Zip: return r * (q + m + 1) + q;
  }
  return 0;
}

// Factors of Xi. Blocks a variant does not train keep their neutral values
// (s = 1, u = 0). For Standard only `direct` (q x m) is meaningful.
struct IntrinsicParams {
  PromptShape shape;
  VariantKind variant = VariantKind::Zip;
  Eigen::MatrixXd U;
  Eigen::VectorXd s;
  Eigen::MatrixXd V;
  Eigen::VectorXd u;
  Eigen::MatrixXd direct;
};

inline IntrinsicParams init_intrinsic(std::uint64_t seed,
                                      const PromptShape& shape,
                                      VariantKind variant) {
  shape.validate();
  const auto q = static_cast<Eigen::Index>(shape.q);
  const auto m = static_cast<Eigen::Index>(shape.m);
  const auto r = static_cast<Eigen::Index>(shape.r);
  IntrinsicParams out;
  out.shape = shape;
  out.variant = variant;
  out.u = Eigen::VectorXd::Zero(q);
  if (variant == VariantKind::Standard) {
    out.direct = Eigen::MatrixXd::Zero(q, m);
    return out;
  }
  out.U = Eigen::MatrixXd::Zero(q, r);
  out.s = Eigen::VectorXd::Ones(r);
  out.V.resize(m, r);
  RngStream rng(derive_seed(seed, seed_tag::kInit));
  for (Eigen::Index j = 0; j < r; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) out.V(i, j) = rng.normal();
  }
  return out;
}

// Xi = U diag(s) V^T + u 1^T, honoring which blocks the variant trains.
inline Eigen::MatrixXd compose_weight(const IntrinsicParams& params) {
  if (params.variant == VariantKind::Standard) return params.direct;
  Eigen::MatrixXd w;
  if (has_diagonal(params.variant)) {
    w = params.U * params.s.asDiagonal() * params.V.transpose();
  } else {
    w = params.U * params.V.transpose();
  }
  if (has_sharing(params.variant)) w.colwise() += params.u;
  return w;
}

namespace detail {

inline void check_blocks(const IntrinsicParams& params) {
  const auto& sh = params.shape;
  const auto q = static_cast<Eigen::Index>(sh.q);
  const auto m = static_cast<Eigen::Index>(sh.m);
  const auto r = static_cast<Eigen::Index>(sh.r);
  bool ok;
  if (params.variant == VariantKind::Standard) {
    ok = params.direct.rows() == q && params.direct.cols() == m;
  } else {
    ok = params.U.rows() == q && params.U.cols() == r && params.s.size() == r &&
         params.V.rows() == m && params.V.cols() == r && params.u.size() == q;
  }
  if (!ok) throw InvalidDimensions("intrinsic params: block shapes mismatch");
}

}  // namespace detail

inline Eigen::VectorXd flatten(const IntrinsicParams& params) {
  detail::check_blocks(params);
  Eigen::VectorXd out(static_cast<Eigen::Index>(
      delta(params.shape, params.variant)));
  Eigen::Index at = 0;
  auto put = [&](const auto& block) {
    const Eigen::Index n = block.size();
    out.segment(at, n) = Eigen::Map<const Eigen::VectorXd>(block.data(), n);
    at += n;
  };
  if (params.variant == VariantKind::Standard) {
    put(params.direct);
    return out;
  }
  put(params.U);
  if (has_diagonal(params.variant)) put(params.s);
  put(params.V);
  if (has_sharing(params.variant)) put(params.u);
  return out;
}

inline IntrinsicParams unflatten(const Eigen::Ref<const Eigen::VectorXd>& vec,
                                 const PromptShape& shape,
                                 VariantKind variant) {
  shape.validate();
  const auto expected = delta(shape, variant);
  if (static_cast<std::size_t>(vec.size()) != expected) {
    throw InvalidDimensions("unflatten: vector length " +
                            std::to_string(vec.size()) + ", expected " +
                            std::to_string(expected));
  }
  const auto q = static_cast<Eigen::Index>(shape.q);
  const auto m = static_cast<Eigen::Index>(shape.m);
  const auto r = static_cast<Eigen::Index>(shape.r);
  IntrinsicParams out;
  out.shape = shape;
  out.variant = variant;
  Eigen::Index at = 0;
  auto take = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd block =
        Eigen::Map<const Eigen::MatrixXd>(vec.data() + at, rows, cols);
    at += rows * cols;
    return block;
  };
  if (variant == VariantKind::Standard) {
    out.direct = take(q, m);
    out.u = Eigen::VectorXd::Zero(q);
    return out;
  }
  out.U = take(q, r);
  out.s = has_diagonal(variant) ? Eigen::VectorXd(take(r, 1))
                                : Eigen::VectorXd::Ones(r);
  out.V = take(m, r);
  out.u = has_sharing(variant) ? Eigen::VectorXd(take(q, 1))
                               : Eigen::VectorXd::Zero(q);
  return out;
}

struct FullPrompt {
  Eigen::MatrixXd theta0;  // p x m, frozen
  Eigen::MatrixXd theta;   // p x m
};

inline FullPrompt reconstruct_prompt(
    const IntrinsicParams& params, const Eigen::MatrixXd& theta0,
    std::span<const TokenProjection> projections) {
  const auto& sh = params.shape;
  if (projections.size() != sh.m) {
    throw InvalidDimensions("reconstruct: expected " + std::to_string(sh.m) +
                            " projections, got " +
                            std::to_string(projections.size()));
  }
  if (static_cast<std::size_t>(theta0.rows()) != sh.p ||
      static_cast<std::size_t>(theta0.cols()) != sh.m) {
    throw InvalidDimensions("reconstruct: theta0 must be p x m");
  }
  for (const auto& proj : projections) {
    if (projection_rows(proj) != sh.p || projection_cols(proj) != sh.q) {
      throw InvalidDimensions("reconstruct: projection is not p x q");
    }
  }
  const Eigen::MatrixXd xi = compose_weight(params);
  FullPrompt out{theta0, theta0};
  for (std::size_t i = 0; i < sh.m; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    out.theta.col(col) += project(projections[i], xi.col(col));
  }
  return out;
}

// Text record:
//   zipzo-intrinsic 1
//   variant <name>
//   shape <p> <m> <q> <r>
//   values <delta>
//   <one shortest-round-trip number per line>
inline void write_intrinsic(std::ostream& os, const IntrinsicParams& params) {
  const Eigen::VectorXd flat = flatten(params);
  const auto& sh = params.shape;
  os << "zipzo-intrinsic 1\n"
     << "variant " << to_string(params.variant) << '\n'
     << "shape " << sh.p << ' ' << sh.m << ' ' << sh.q << ' ' << sh.r << '\n'
     << "values " << flat.size() << '\n';
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    os << text::format_double(flat[i]) << '\n';
  }
}

inline IntrinsicParams read_intrinsic(std::istream& is) {
  auto expect_word = [&](std::string_view word) {
    std::string got;
    if (!(is >> got) || got != word) {
      throw InvalidDimensions("intrinsic record: expected '" +
                              std::string(word) + "'");
    }
  };
  expect_word("zipzo-intrinsic");
  int version = 0;
  if (!(is >> version) || version != 1) {
    throw InvalidDimensions("intrinsic record: unsupported version");
  }
  expect_word("variant");
  std::string variant_name;
  is >> variant_name;
  const VariantKind variant = parse_variant(variant_name);
  expect_word("shape");
  PromptShape shape;
  if (!(is >> shape.p >> shape.m >> shape.q >> shape.r)) {
    throw InvalidDimensions("intrinsic record: bad shape line");
  }
  expect_word("values");
  std::size_t count = 0;
  if (!(is >> count)) throw InvalidDimensions("intrinsic record: bad count");
  Eigen::VectorXd flat(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    std::string token;
    if (!(is >> token)) throw InvalidDimensions("intrinsic record: truncated");
    const auto v = text::parse_double(token);
    if (!v) throw InvalidDimensions("intrinsic record: bad number " + token);
    flat[static_cast<Eigen::Index>(i)] = *v;
  }
  return unflatten(flat, shape, variant);
}

inline std::string serialize_intrinsic(const IntrinsicParams& params) {
  std::ostringstream os;
  write_intrinsic(os, params);
  return os.str();
}

inline IntrinsicParams parse_intrinsic(const std::string& record) {
  std::istringstream is(record);
  return read_intrinsic(is);
}

}  // namespace zipzo
