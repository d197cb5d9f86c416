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

#include "zipzo/transforms.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

namespace zipzo {
namespace {

TEST(WalshHadamardTest, SmallCases) {
  EXPECT_EQ(walsh_hadamard(std::vector<double>{1, 0}),
            (std::vector<double>{1, 1}));
  EXPECT_EQ(walsh_hadamard(std::vector<double>{1, 1, 1, 1}),
            (std::vector<double>{4, 0, 0, 0}));
  const auto once = walsh_hadamard(std::vector<double>{3, -1, 2, 0});
  EXPECT_EQ(walsh_hadamard(once), (std::vector<double>{12, -4, 8, 0}));
  EXPECT_EQ(walsh_hadamard(std::vector<double>{5}), (std::vector<double>{5}));
}

TEST(WalshHadamardTest, RejectsNonPowerOfTwo) {
  EXPECT_THROW(walsh_hadamard(std::vector<double>{1, 2, 3}), ContractViolation);
  EXPECT_THROW(walsh_hadamard(std::vector<double>{}), ContractViolation);
}

TEST(WalshHadamardTest, InvolutionUpToLength) {
  RngStream rng(11);
  for (std::size_t n = 1; n <= 4096; n <<= 1) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    const auto twice = walsh_hadamard(walsh_hadamard(v));
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err = std::max(err, std::abs(twice[i] - static_cast<double>(n) * v[i]));
      scale = std::max(scale, std::abs(static_cast<double>(n) * v[i]));
    }
    EXPECT_LE(err, 1e-12 * scale) << "n=" << n;
  }
}

TEST(WalshHadamardTest, MatchesExplicitMatrix) {
  // H_ij = (-1)^popcount(i & j)
  const std::size_t n = 16;
  RngStream rng(3);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  const auto fast = walsh_hadamard(v);
  for (std::size_t i = 0; i < n; ++i) {
    double ref = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      ref += (__builtin_popcountll(i & j) % 2 ? -1.0 : 1.0) * v[j];
    }
    EXPECT_NEAR(fast[i], ref, 1e-12);
  }
}

TEST(FastfoodTest, PaddingAndDeterminism) {
  const auto a = build_fastfood(7, 512, 62);
  const auto b = build_fastfood(7, 512, 62);
  EXPECT_EQ(a.padded_size(), 512u);
  EXPECT_EQ(build_fastfood(7, 500, 62).padded_size(), 512u);
  EXPECT_EQ(a.gaussian(), b.gaussian());
  EXPECT_EQ(a.signs(), b.signs());
  EXPECT_EQ(a.permutation(), b.permutation());
  EXPECT_NE(a.gaussian(), build_fastfood(8, 512, 62).gaussian());

  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(62, -1.0, 1.0);
  const Eigen::VectorXd pa = a.apply(v);
  const Eigen::VectorXd pb = b.apply(v);
  EXPECT_EQ(pa, pb);
}

TEST(FastfoodTest, PermutationIsBijection) {
  const auto f = build_fastfood(99, 300, 20);
  std::vector<bool> seen(f.padded_size(), false);
  for (std::size_t i : f.permutation()) {
    ASSERT_LT(i, f.padded_size());
    EXPECT_FALSE(seen[i]);
    seen[i] = true;
  }
  for (double s : f.signs()) EXPECT_TRUE(s == 1.0 || s == -1.0);
}

TEST(FastfoodTest, InvalidDimensions) {
  EXPECT_THROW(build_fastfood(1, 10, 11), InvalidDimensions);
  EXPECT_THROW(build_fastfood(1, 0, 0), InvalidDimensions);
  const auto f = build_fastfood(1, 16, 4);
  EXPECT_THROW(f.apply(Eigen::VectorXd::Zero(5)), InvalidDimensions);
}

TEST(FastfoodTest, Linearity) {
  const auto f = build_fastfood(5, 500, 62);
  RngStream rng(1);
  Eigen::VectorXd v(62), w(62);
  for (Eigen::Index i = 0; i < 62; ++i) {
    v[i] = rng.normal();
    w[i] = rng.normal();
  }
  EXPECT_EQ(f.apply(Eigen::VectorXd::Zero(62)), Eigen::VectorXd::Zero(500));
  const Eigen::VectorXd two_v = f.apply(2.0 * v);
  const Eigen::VectorXd v_two = 2.0 * f.apply(v);
  EXPECT_LE((two_v - v_two).norm(), 1e-10 * v_two.norm());
  const Eigen::VectorXd lhs = f.apply(1.5 * v - 0.25 * w);
  const Eigen::VectorXd rhs = 1.5 * f.apply(v) - 0.25 * f.apply(w);
  EXPECT_LE((lhs - rhs).norm(), 1e-10 * rhs.norm());
}

// Mean of ||M v||^2 / ||v||^2 over independent seeds for a fixed unit v.
template <class Make>
double mean_norm_ratio(Make make, std::size_t q) {
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(q),
                                                 1.0, 2.0);
  v.normalize();
  const int seeds = 10000;
  double sum = 0.0;
  for (int s = 0; s < seeds; ++s) sum += make(s).apply(v).squaredNorm();
  return sum / seeds;
}

TEST(FastfoodTest, IsometryInExpectation) {
  const double fast = mean_norm_ratio(
      [](int s) { return FastfoodProjection(s, 256, 32); }, 32);
  EXPECT_NEAR(fast, 1.0, 0.05);
  // Non power-of-two width goes through pad-then-truncate.
  const double padded = mean_norm_ratio(
      [](int s) { return FastfoodProjection(s, 200, 32); }, 32);
  EXPECT_NEAR(padded, 1.0, 0.05);
}

TEST(DenseProjectionTest, IsometryInExpectation) {
  const double dense = mean_norm_ratio(
      [](int s) { return DenseProjection(s, 256, 32); }, 32);
  EXPECT_NEAR(dense, 1.0, 0.05);
}

TEST(DenseProjectionTest, DeterministicAndLinear) {
  const DenseProjection a(4, 20, 5), b(4, 20, 5);
  EXPECT_EQ(a.entries(), b.entries());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(5);
  EXPECT_LE((a.apply(3.0 * v) - 3.0 * a.apply(v)).norm(),
            1e-12 * a.apply(v).norm());
}

TEST(TokenProjectionTest, PerTokenSeedsDiffer) {
  const auto projs = make_token_projections(ProjectionKind::Fastfood, 42, 64,
                                            8, 3);
  ASSERT_EQ(projs.size(), 3u);
  const auto& p0 = std::get<FastfoodProjection>(projs[0]);
  const auto& p1 = std::get<FastfoodProjection>(projs[1]);
  EXPECT_EQ(p0.seed(), token_seed(42, 0));
  EXPECT_NE(p0.seed(), p1.seed());
  EXPECT_NE(p0.gaussian(), p1.gaussian());
  EXPECT_THROW(make_token_projections(ProjectionKind::Identity, 1, 4, 3, 2),
               InvalidDimensions);
}

}  // namespace
}  // namespace zipzo
