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

#include "zipzo/verify.hpp"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

namespace zipzo {
namespace {

TEST(UnbiasednessTest, PassesOnQuadratic) {
  const auto r = verify_unbiasedness(20, 1, 1e-5, 100000, 1);
  ASSERT_TRUE(r.pass.has_value());
  EXPECT_TRUE(*r.pass) << to_json(r).dump();
  EXPECT_EQ(r.estimates.size(), 20u);
  EXPECT_EQ(r.samples, 100000u);
  EXPECT_LE(r.details["max_abs_z"].get<double>(), 4.0);
}

TEST(UnbiasednessTest, NegativeControlsFail) {
  for (auto inj : {Injection::OneSidedSigns, Injection::DirectNotReciprocal}) {
    const auto r = verify_unbiasedness(20, 1, 1e-5, 100000, 1, inj);
    ASSERT_TRUE(r.pass.has_value());
    EXPECT_FALSE(*r.pass) << to_string(inj);
  }
}

TEST(SecondMomentTest, MatchesDimensionAtSingleSample) {
  for (std::size_t d : {1u, 8u, 32u}) {
    const auto r = verify_second_moment(d, 1, 1e-5, 100000, 2);
    ASSERT_TRUE(r.pass.has_value());
    EXPECT_TRUE(*r.pass) << "d=" << d << " ratio=" << r.estimates[0];
  }
  // At d = 1 the estimate is exactly the gradient.
  const auto one = verify_second_moment(1, 1, 1e-5, 1000, 2);
  EXPECT_NEAR(one.estimates[0], 1.0, 1e-6);
}

TEST(SecondMomentTest, NegativeControlFails) {
  const auto r =
      verify_second_moment(16, 1, 1e-5, 20000, 3, Injection::DirectNotReciprocal);
  ASSERT_TRUE(r.pass.has_value());
  EXPECT_FALSE(*r.pass);
}

TEST(SecondMomentTest, MultiSampleIsReportedOnly) {
  const auto r = verify_second_moment(16, 4, 1e-5, 20000, 3);
  EXPECT_FALSE(r.pass.has_value());
  EXPECT_EQ(r.details["predicted_d_over_n"].get<double>(), 4.0);
  EXPECT_TRUE(std::isfinite(r.estimates[0]));
}

TEST(ReportTest, ReproducibleFromInputs) {
  const auto a = to_json(verify_unbiasedness(6, 2, 1e-4, 2000, 9));
  const auto b = to_json(verify_unbiasedness(6, 2, 1e-4, 2000, 9));
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a["check"], "lemma1");
  EXPECT_TRUE(a.contains("tolerance"));
  EXPECT_EQ(a["samples"], 2000);
}

TEST(StatisticsTest, PooledSd) {
  ArmResult a{"a", {1.0, 2.0, 3.0}, {}, {}};
  ArmResult b{"b", {2.0, 4.0, 6.0, 8.0}, {}, {}};
  EXPECT_DOUBLE_EQ(sample_variance(a.final_loss), 1.0);
  EXPECT_DOUBLE_EQ(sample_variance(b.final_loss), 20.0 / 3.0);
  // ((3-1) * 1 + (4-1) * 20/3) / (3 + 4 - 2) = 22 / 5
  EXPECT_DOUBLE_EQ(pooled_sd(a, b), std::sqrt(22.0 / 5.0));
  EXPECT_DOUBLE_EQ(a.mean_loss(), 2.0);
}

TEST(StatisticsTest, FirstReaching) {
  std::vector<TraceRecord> trace(4);
  const double losses[] = {5.0, 3.0, 0.9, 0.5};
  for (std::size_t i = 0; i < 4; ++i) {
    trace[i].queries_used = 10 * (i + 1);
    trace[i].train_loss = losses[i];
  }
  EXPECT_EQ(first_reaching(trace, 1.0), 30u);
  EXPECT_EQ(first_reaching(trace, 5.0), 10u);
  EXPECT_FALSE(first_reaching(trace, 0.1).has_value());
}

TEST(AblationTest, ArmLayout) {
  const auto arms = ablation_arms();
  ASSERT_EQ(arms.size(), 9u);
  EXPECT_EQ(arms[0].variant, VariantKind::LowRank);
  EXPECT_FALSE(arms[0].clip);
  EXPECT_EQ(arms[7].variant, VariantKind::Zip);
  EXPECT_TRUE(arms[7].clip);
  EXPECT_EQ(arms[8].variant, VariantKind::Standard);
  int zips = 0;
  for (const auto& a : arms) zips += a.variant == VariantKind::Zip;
  EXPECT_EQ(zips, 2);
}

ObjectiveSpec tiny_surrogate() {
  ObjectiveSpec s;
  s.p = 16;
  s.m = 4;
  s.hidden = 16;
  s.train_samples = 64;
  s.test_samples = 32;
  return s;
}

TrainingConfig tiny_training() {
  TrainingConfig tc;
  tc.shape = {16, 4, 4, 2};
  tc.zo.budget = 200;
  tc.batch_size = 32;
  return tc;
}

TEST(ThresholdSweepTest, ReportShape) {
  ThresholdSweepConfig cfg;
  cfg.objective = tiny_surrogate();
  cfg.training = tiny_training();
  cfg.ks = {0, 5, 10};
  cfg.seeds = {1, 2};
  const auto r = threshold_sweep(cfg);
  ASSERT_TRUE(r.pass.has_value());
  EXPECT_EQ(r.estimates.size(), 4u);
  EXPECT_EQ(r.details["arms"].size(), 4u);
  EXPECT_EQ(r.details["delta"], delta(cfg.training.shape, VariantKind::Zip));
  EXPECT_EQ(r.details["arms"][3]["label"], "no-clip");
  EXPECT_TRUE(r.details.contains("pooled_sd"));
  EXPECT_EQ(to_json(threshold_sweep(cfg)).dump(), to_json(r).dump());

  cfg.ks = {0, 10};
  EXPECT_FALSE(*threshold_sweep(cfg).pass);
}

TEST(AblationTest, ReportShape) {
  AblationConfig cfg;
  cfg.objective = tiny_surrogate();
  cfg.training = tiny_training();
  cfg.seeds = {1};
  const auto r = ablation_grid(cfg);
  ASSERT_TRUE(r.pass.has_value());
  EXPECT_EQ(r.estimates.size(), 9u);
  EXPECT_EQ(r.details["arms"].size(), 9u);
}

TEST(DimScalingTest, SmallRun) {
  DimScalingConfig cfg;
  cfg.dims = {4, 32};
  cfg.seeds = {1, 2};
  cfg.budget = 20000;
  const auto r = dimension_scaling_experiment(cfg);
  ASSERT_TRUE(r.pass.has_value());
  EXPECT_EQ(r.details["runs"].size(), 4u);
  EXPECT_EQ(r.estimates.size(), 2u);
  EXPECT_LT(r.estimates[0], r.estimates[1]);
}

}  // namespace
}  // namespace zipzo
