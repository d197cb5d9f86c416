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

#include "zipzo/objectives.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "zipzo/optimizer.hpp"

namespace zipzo {
namespace {

ObjectiveSpec small_spec(ObjectiveKind kind, std::uint64_t seed = 3) {
  ObjectiveSpec s;
  s.kind = kind;
  s.seed = seed;
  s.dim = 10;
  s.classes = 3;
  s.feature_dim = 4;
  s.train_samples = 30;
  s.test_samples = 12;
  s.hidden = 8;
  s.p = 8;
  s.m = 2;
  return s;
}

Eigen::VectorXd random_point(RngStream& rng, std::size_t d, double sd) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(d));
  for (auto& v : x) v = sd * rng.normal();
  return x;
}

TEST(QuadraticTest, MinimumAndGradient) {
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::Quadratic;
  spec.dim = 12;
  spec.kappa = 10.0;
  const QuadraticObjective q(spec);
  EXPECT_EQ(q.loss(q.minimizer(), {}), 0.0);
  EXPECT_EQ(q.gradient(q.minimizer(), {}), Eigen::VectorXd::Zero(12));
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(12);
  EXPECT_LE((q.gradient(x, {}) - q.hessian() * (x - q.minimizer())).norm(),
            1e-12);
  EXPECT_THROW(q.accuracy(x, q.train_indices()), Unsupported);
}

TEST(QuadraticTest, SpectrumControlsConditioning) {
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::Quadratic;
  spec.dim = 16;
  spec.kappa = 25.0;
  const QuadraticObjective q(spec);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.hessian());
  EXPECT_NEAR(eig.eigenvalues().minCoeff(), 1.0, 1e-10);
  EXPECT_NEAR(eig.eigenvalues().maxCoeff(), 25.0, 1e-10);
  EXPECT_LE((q.hessian() - q.hessian().transpose()).norm(), 0.0);
}

TEST(SoftmaxTest, ZeroWeightsGiveLogC) {
  for (std::size_t c : {2u, 3u, 8u, 10u}) {
    auto spec = small_spec(ObjectiveKind::SoftmaxRegression);
    spec.classes = c;
    const SoftmaxRegressionObjective obj(spec);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(obj.dim());
    EXPECT_NEAR(obj.loss(zero, {}), std::log(static_cast<double>(c)), 1e-12);
    EXPECT_NEAR(obj.loss(zero, Batch{{0, 5, 7}, 1}),
                std::log(static_cast<double>(c)), 1e-12);
  }
}

TEST(SoftmaxTest, TieBreakGivesHalfOnBalancedPair) {
  auto spec = small_spec(ObjectiveKind::SoftmaxRegression);
  spec.classes = 2;
  spec.test_samples = 400;
  const SoftmaxRegressionObjective obj(spec);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(obj.dim());
  const double acc = obj.accuracy(zero, obj.test_indices());
  const double se = std::sqrt(0.25 / 400.0);
  EXPECT_LE(std::abs(acc - 0.5), 3.0 * se);
}

TEST(SoftmaxTest, SingleExampleAccuracy) {
  auto spec = small_spec(ObjectiveKind::SoftmaxRegression);
  const SoftmaxRegressionObjective obj(spec);
  // Weight row for the example's own class equal to its features.
  const std::size_t i = 4;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 4);
  w.row(static_cast<Eigen::Index>(obj.labels()[i])) =
      obj.features().col(static_cast<Eigen::Index>(i)).transpose();
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(w.data(), 12);
  const std::vector<std::size_t> one{i};
  EXPECT_EQ(obj.accuracy(x, one), 1.0);
}

TEST(SoftmaxTest, SeparatedClustersReachPerfectAccuracy) {
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::SoftmaxRegression;
  spec.classes = 4;
  spec.feature_dim = 8;
  spec.separation = 10.0;
  spec.noise = 0.5;
  spec.train_samples = 256;
  spec.test_samples = 256;
  const SoftmaxRegressionObjective obj(spec);
  const auto fo = run_fo_sgd(obj, Eigen::VectorXd::Zero(obj.dim()), 0.05, 500,
                             1, 64);
  EXPECT_LT(obj.loss(fo.x, {}), 1e-2);
  EXPECT_EQ(obj.accuracy(fo.x, obj.test_indices()), 1.0);
  EXPECT_EQ(obj.accuracy(fo.x, obj.train_indices()), 1.0);
}

TEST(SurrogateTest, PureAndDeterministic) {
  const auto spec = small_spec(ObjectiveKind::FrozenPromptSurrogate);
  const FrozenPromptSurrogate a(spec), b(spec);
  const Eigen::VectorXd theta0 = a.initial_point();
  const Batch batch{{1, 3, 5, 7}, 9};
  const double first = a.loss(theta0, batch);
  EXPECT_EQ(a.loss(theta0, batch), first);
  EXPECT_EQ(b.loss(theta0, batch), first);
  EXPECT_EQ(a.labels(), b.labels());
  auto other = spec;
  other.seed = 4;
  EXPECT_NE(FrozenPromptSurrogate(other).loss(
                FrozenPromptSurrogate(other).initial_point(), batch),
            first);
}

TEST(SurrogateTest, AnchorAddsProximalTerm) {
  auto spec = small_spec(ObjectiveKind::FrozenPromptSurrogate);
  spec.anchor = 0.0;
  const FrozenPromptSurrogate plain(spec);
  spec.anchor = 0.3;
  const FrozenPromptSurrogate anchored(spec);
  const Eigen::VectorXd theta0 = plain.initial_point();
  const Eigen::VectorXd x = theta0 + Eigen::VectorXd::Ones(theta0.size());
  EXPECT_EQ(plain.loss(theta0, {}), anchored.loss(theta0, {}));
  EXPECT_NEAR(anchored.loss(x, {}) - plain.loss(x, {}),
              0.15 * static_cast<double>(x.size()), 1e-12);
}

TEST(ObjectiveTest, RejectsWrongDimension) {
  for (auto kind : {ObjectiveKind::Quadratic, ObjectiveKind::SoftmaxRegression,
                    ObjectiveKind::FrozenPromptSurrogate}) {
    const auto obj = make_objective(small_spec(kind));
    const Eigen::VectorXd bad = Eigen::VectorXd::Zero(obj->dim() + 1);
    EXPECT_THROW(obj->loss(bad, {}), InvalidDimensions) << to_string(kind);
    EXPECT_THROW(obj->gradient(bad, {}), InvalidDimensions) << to_string(kind);
  }
  auto spec = small_spec(ObjectiveKind::SoftmaxRegression);
  const auto obj = make_objective(spec);
  EXPECT_THROW(obj->loss(Eigen::VectorXd::Zero(obj->dim()), Batch{{1000}, 0}),
               InvalidDimensions);
}

TEST(ObjectiveTest, KindNamesRoundTrip) {
  for (auto kind : {ObjectiveKind::Quadratic, ObjectiveKind::SoftmaxRegression,
                    ObjectiveKind::FrozenPromptSurrogate}) {
    EXPECT_EQ(parse_objective_kind(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_objective_kind("clip"), Unsupported);
}

// Central differences with step 1e-5 at 20 random points per objective kind.
TEST(GradientTest, MatchesFiniteDifferences) {
  for (auto kind : {ObjectiveKind::Quadratic, ObjectiveKind::SoftmaxRegression,
                    ObjectiveKind::FrozenPromptSurrogate}) {
    const auto obj = make_objective(small_spec(kind));
    RngStream rng(derive_seed(5, static_cast<std::uint64_t>(kind)));
    const Batch batch{{0, 2, 4, 6, 8, 10}, 1};
    double worst = 0.0;
    for (int point = 0; point < 20; ++point) {
      const Eigen::VectorXd x =
          obj->initial_point() + random_point(rng, obj->dim(), 0.5);
      const Eigen::VectorXd g = obj->gradient(x, batch);
      Eigen::VectorXd fd(g.size());
      const double h = 1e-5;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd plus = x, minus = x;
        plus[i] += h;
        minus[i] -= h;
        fd[i] = (obj->loss(plus, batch) - obj->loss(minus, batch)) / (2 * h);
      }
      const double rel = (fd - g).cwiseAbs().maxCoeff() /
                         std::max(g.cwiseAbs().maxCoeff(), 1e-8);
      worst = std::max(worst, rel);
    }
    EXPECT_LE(worst, 1e-5) << to_string(kind);
  }
}

TEST(DescribeTest, MentionsKeyConstants) {
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::SoftmaxRegression;
  EXPECT_NE(describe(spec).find("ln_classes"), std::string::npos);
  spec.kind = ObjectiveKind::Quadratic;
  EXPECT_NE(describe(spec).find("kappa 10"), std::string::npos);
}

}  // namespace
}  // namespace zipzo
