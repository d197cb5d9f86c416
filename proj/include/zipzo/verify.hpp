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

// Monte-Carlo checks of the estimator's first and second moments, and the
// desk-scale experiments (dimension scaling, clip-threshold sweep, module
// ablation). Every report records its sample counts, seeds and tolerance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "zipzo/estimator.hpp"
#include "zipzo/objectives.hpp"
#include "zipzo/optimizer.hpp"
#include "zipzo/random.hpp"
#include "zipzo/reparam.hpp"

namespace zipzo {

struct VerificationReport {
  std::string name;
  std::uint64_t samples = 0;
  std::vector<double> estimates;
  std::vector<double> std_errors;
  // nullopt when the check only measures.
  std::optional<bool> pass;
  std::string tolerance;
  std::vector<std::uint64_t> seeds;
  nlohmann::json details = nlohmann::json::object();
};

inline nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json j;
  j["check"] = r.name;
  j["samples"] = r.samples;
  j["estimates"] = r.estimates;
  j["std_errors"] = r.std_errors;
  j["pass"] = r.pass ? nlohmann::json(*r.pass) : nlohmann::json(nullptr);
  j["tolerance"] = r.tolerance;
  j["seeds"] = r.seeds;
  j["details"] = r.details;
  return j;
}

// Deliberate estimator faults used as negative controls.
enum class Injection {
  None,
  // Perturbation signs are +1 with probability 3/4 instead of 1/2.
  OneSidedSigns,
  // Multiplies the difference quotient by z instead of z^-1.
  DirectNotReciprocal,
};

inline std::string_view to_string(Injection i) noexcept {
  switch (i) {
    case Injection::None: return "none";
    case Injection::OneSidedSigns: return "one-sided-signs";
    case Injection::DirectNotReciprocal: return "direct-not-reciprocal";
  }
  return "?";
}

inline Injection parse_injection(std::string_view s) {
  for (auto i : {Injection::None, Injection::OneSidedSigns,
                 Injection::DirectNotReciprocal}) {
    if (s == to_string(i)) return i;
  }
  throw ContractViolation("unknown injection '" + std::string(s) + "'");
}

namespace detail {

// Welford accumulator over vectors.
class VectorMoments {
 public:
  explicit VectorMoments(Eigen::Index dim)
      : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::VectorXd::Zero(dim)) {}

  void add(const Eigen::VectorXd& v) {
    ++count_;
    const Eigen::VectorXd delta = v - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_.array() += delta.array() * (v - mean_).array();
  }

  std::uint64_t count() const noexcept { return count_; }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  Eigen::VectorXd std_error() const {
    if (count_ < 2) return Eigen::VectorXd::Zero(mean_.size());
    const double n = static_cast<double>(count_);
    return (m2_ / (n - 1.0)).array().sqrt() / std::sqrt(n);
  }

 private:
  std::uint64_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

inline std::uint64_t majority(std::size_t n) {
  return static_cast<std::uint64_t>(std::ceil(0.8 * static_cast<double>(n)));
}

// Estimate m of a Monte-Carlo run: a regular N-SPSA estimate, or one with an
// injected fault.
template <LossFunction F>
Eigen::VectorXd draw_estimate(const F& f, const Eigen::VectorXd& x, double c,
                              std::size_t n_samples, std::uint64_t seed,
                              std::uint64_t m, Injection injection) {
  QueryLedger ledger(2 * n_samples);
  const PerturbationKey key{seed, m};
  if (injection == Injection::None) {
    return n_spsa(f, x, c, n_samples, Batch{}, ledger, key).g_hat;
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.size());
  for (std::size_t n = 0; n < n_samples; ++n) {
    RngStream rng = key.stream(n);
    PerturbationDirection z =
        sample_perturbation(rng, static_cast<std::size_t>(x.size()));
    if (injection == Injection::OneSidedSigns) {
      for (Eigen::Index i = 0; i < z.signs.size(); ++i) {
        z.signs[i] = rng.uniform() < 0.75 ? 1.0 : -1.0;
      }
      sum += spsa_sample(f, x, z, c, Batch{}, ledger).gradient;
    } else {
      const SpsaSample s = spsa_sample(f, x, z, c, Batch{}, ledger);
      const Eigen::VectorXd quotient = s.gradient.cwiseProduct(z.z());
      sum += quotient.cwiseProduct(z.z());
    }
  }
  return sum / static_cast<double>(n_samples);
}

struct QuadraticProbe {
  QuadraticObjective objective;
  Eigen::VectorXd point;
  Eigen::VectorXd gradient;
};

// Seeded quadratic plus an evaluation point away from its minimum.
inline QuadraticProbe make_probe(std::size_t d, std::uint64_t seed) {
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::Quadratic;
  spec.dim = d;
  spec.seed = seed;
  QuadraticProbe probe{QuadraticObjective(spec), {}, {}};
  RngStream rng(derive_seed(seed, seed_tag::kVerify, 0));
  probe.point = probe.objective.minimizer();
  for (Eigen::Index i = 0; i < probe.point.size(); ++i) {
    probe.point[i] += rng.normal();
  }
  probe.gradient = probe.objective.gradient(probe.point, Batch{});
  return probe;
}

}  // namespace detail

// Mean of M estimates against a known gradient, as per-coordinate z-scores.
// Passes when every |z| <= 4. Coordinates with zero sample variance score 0
// when exact and +inf otherwise.
template <LossFunction F>
VerificationReport check_unbiasedness(const F& f, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& true_gradient,
                                      std::size_t n_samples, double c,
                                      std::uint64_t draws, std::uint64_t seed,
                                      Injection injection = Injection::None) {
  detail::VectorMoments moments(x.size());
  const std::uint64_t stream = derive_seed(seed, seed_tag::kVerify, 1);
  for (std::uint64_t m = 0; m < draws; ++m) {
    moments.add(detail::draw_estimate(f, x, c, n_samples, stream, m, injection));
  }
  VerificationReport r;
  r.name = "lemma1";
  r.samples = draws;
  r.seeds = {seed};
  r.tolerance = "all |z| <= 4";
  const Eigen::VectorXd se = moments.std_error();
  std::vector<double> z(static_cast<std::size_t>(x.size()));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double diff = moments.mean()[i] - true_gradient[i];
    double zi;
    if (se[i] > 0.0) {
      zi = diff / se[i];
    } else {
      zi = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    z[static_cast<std::size_t>(i)] = zi;
    worst = std::max(worst, std::abs(zi));
    r.estimates.push_back(moments.mean()[i]);
    r.std_errors.push_back(se[i]);
  }
  r.pass = worst <= 4.0;
  r.details["z_scores"] = z;
  r.details["max_abs_z"] = worst;
  r.details["true_gradient"] =
      std::vector<double>(true_gradient.data(),
                          true_gradient.data() + true_gradient.size());
  r.details["n_spsa"] = n_samples;
  r.details["c"] = c;
  return r;
}

inline VerificationReport verify_unbiasedness(
    std::size_t d, std::size_t n_samples, double c, std::uint64_t draws,
    std::uint64_t seed, Injection injection = Injection::None) {
  const auto probe = detail::make_probe(d, seed);
  auto r = check_unbiasedness(probe.objective, probe.point, probe.gradient,
                              n_samples, c, draws, seed, injection);
  r.details["d"] = d;
  return r;
}

// E ||g_hat||^2 / ||grad f||^2. Asserted (within 5% of d) only for N = 1;
// for N > 1 the ratio is reported next to d / N.
template <LossFunction F>
VerificationReport check_second_moment(const F& f, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& true_gradient,
                                       std::size_t n_samples, double c,
                                       std::uint64_t draws, std::uint64_t seed,
                                       Injection injection = Injection::None) {
  const double grad_sq = true_gradient.squaredNorm();
  if (!(grad_sq > 0.0)) {
    throw ContractViolation("second moment: gradient must be nonzero");
  }
  detail::VectorMoments moments(1);
  const std::uint64_t stream = derive_seed(seed, seed_tag::kVerify, 2);
  Eigen::VectorXd v(1);
  for (std::uint64_t m = 0; m < draws; ++m) {
    v[0] = detail::draw_estimate(f, x, c, n_samples, stream, m, injection)
               .squaredNorm() /
           grad_sq;
    moments.add(v);
  }
  const double d = static_cast<double>(x.size());
  const double ratio = moments.mean()[0];
  VerificationReport r;
  r.name = "lemma2";
  r.samples = draws;
  r.seeds = {seed};
  r.estimates = {ratio};
  r.std_errors = {moments.std_error()[0]};
  r.details["d"] = x.size();
  r.details["n_spsa"] = n_samples;
  r.details["c"] = c;
  r.details["predicted_d_over_n"] = d / static_cast<double>(n_samples);
  if (n_samples == 1) {
    r.tolerance = "|ratio - d| <= 0.05 d";
    r.pass = std::abs(ratio - d) <= 0.05 * d;
  } else {
    r.tolerance = "reported only for N > 1";
  }
  return r;
}

inline VerificationReport verify_second_moment(
    std::size_t d, std::size_t n_samples, double c, std::uint64_t draws,
    std::uint64_t seed, Injection injection = Injection::None) {
  const auto probe = detail::make_probe(d, seed);
  return check_second_moment(probe.objective, probe.point, probe.gradient,
                             n_samples, c, draws, seed, injection);
}

// ---------------------------------------------------------------------------
// Dimension scaling: naive ZO vs FO on matched quadratics.

struct DimScalingConfig {
  std::vector<std::size_t> dims{16, 64, 256};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::uint64_t budget = 200000;
  std::size_t n_spsa = 1;
  GainSchedule schedule{0.05, 0.0, 0.001, 0.0};
  // Divide a1 by d (the stable ZO step shrinks like 1/d).
  bool normalize_lr_by_dim = true;
  double fo_lr = 0.1;
  std::uint64_t fo_max_iters = 10000;
  double target_fraction = 0.1;
  double kappa = 10.0;
};

inline std::optional<std::uint64_t> first_reaching(
    const std::vector<TraceRecord>& trace, double target) {
  for (const auto& rec : trace) {
    if (rec.train_loss <= target) return rec.queries_used;
  }
  return std::nullopt;
}

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline nlohmann::json maybe(const std::optional<std::uint64_t>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

// Censored runs (target never reached) count as +inf.
inline VerificationReport dimension_scaling_experiment(
    const DimScalingConfig& cfg) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t nd = cfg.dims.size(), ns = cfg.seeds.size();
  std::vector<std::vector<double>> zo(nd, std::vector<double>(ns, inf));
  std::vector<std::vector<double>> fo(nd, std::vector<double>(ns, inf));
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < nd; ++i) {
    for (std::size_t k = 0; k < ns; ++k) {
      ObjectiveSpec spec;
      spec.kind = ObjectiveKind::Quadratic;
      spec.dim = cfg.dims[i];
      spec.kappa = cfg.kappa;
      spec.seed = cfg.seeds[k];
      const QuadraticObjective obj(spec);
      const Eigen::VectorXd x0 = obj.initial_point();
      const double target = cfg.target_fraction * obj.loss(x0, Batch{});

      ZoRunConfig zc;
      zc.schedule = cfg.schedule;
      if (cfg.normalize_lr_by_dim) {
        zc.schedule.a1 /= static_cast<double>(cfg.dims[i]);
      }
      zc.n_spsa = cfg.n_spsa;
      zc.budget = cfg.budget;
      zc.seed = cfg.seeds[k];
      const auto zo_run = run_naive_zo(obj, zc);
      const auto zo_hit = first_reaching(zo_run.state.trace, target);

      const auto fo_run =
          run_fo_sgd(obj, x0, cfg.fo_lr, cfg.fo_max_iters, cfg.seeds[k]);
      const auto fo_hit = first_reaching(fo_run.trace, target);

      if (zo_hit) zo[i][k] = static_cast<double>(*zo_hit);
      if (fo_hit) fo[i][k] = static_cast<double>(*fo_hit);
      rows.push_back({{"dim", cfg.dims[i]},
                      {"seed", cfg.seeds[k]},
                      {"target", target},
                      {"zo_queries", detail::maybe(zo_hit)},
                      {"fo_iterations", detail::maybe(fo_hit)}});
    }
  }

  std::uint64_t increasing_seeds = 0;
  for (std::size_t k = 0; k < ns; ++k) {
    bool ok = true;
    for (std::size_t i = 1; i < nd; ++i) ok = ok && zo[i][k] > zo[i - 1][k];
    if (ok) ++increasing_seeds;
  }
  std::vector<double> zo_median(nd), fo_median(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    zo_median[i] = detail::median(zo[i]);
    fo_median[i] = detail::median(fo[i]);
  }
  const double fo_spread =
      *std::max_element(fo_median.begin(), fo_median.end()) /
      *std::min_element(fo_median.begin(), fo_median.end());
  const bool zo_ok = increasing_seeds >= detail::majority(ns);
  const bool fo_ok = fo_spread < 2.0;

  VerificationReport r;
  r.name = "dim-scaling";
  r.samples = ns;
  r.seeds = cfg.seeds;
  r.estimates = zo_median;
  r.tolerance =
      "ZO queries-to-target strictly increasing over dims in >= 4/5 seeds; "
      "FO median iterations max/min < 2";
  r.pass = zo_ok && fo_ok;
  r.details["dims"] = cfg.dims;
  r.details["zo_median_queries"] = zo_median;
  r.details["fo_median_iterations"] = fo_median;
  r.details["fo_spread"] = fo_spread;
  r.details["increasing_seeds"] = increasing_seeds;
  r.details["runs"] = rows;
  r.details["budget"] = cfg.budget;
  r.details["n_spsa"] = cfg.n_spsa;
  return r;
}

// ---------------------------------------------------------------------------
// Arm statistics shared by the sweep and the ablation.

struct ArmResult {
  std::string label;
  std::vector<double> final_loss;      // one per seed
  std::vector<double> final_accuracy;  // one per seed
  // Training loss after the first quarter of the budget, one per seed.
  std::vector<double> early_loss;

  double mean_loss() const {
    double s = 0.0;
    for (double v : final_loss) s += v;
    return s / static_cast<double>(final_loss.size());
  }
};

inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (static_cast<double>(v.size()) - 1.0);
}

// Pooled standard deviation of two arms' final losses.
inline double pooled_sd(const ArmResult& a, const ArmResult& b) {
  const double na = static_cast<double>(a.final_loss.size());
  const double nb = static_cast<double>(b.final_loss.size());
  const double dof = na + nb - 2.0;
  if (dof <= 0.0) return 0.0;
  return std::sqrt(((na - 1.0) * sample_variance(a.final_loss) +
                    (nb - 1.0) * sample_variance(b.final_loss)) /
                   dof);
}

inline nlohmann::json to_json(const ArmResult& a) {
  return {{"label", a.label},
          {"mean_final_loss", a.mean_loss()},
          {"final_loss", a.final_loss},
          {"final_accuracy", a.final_accuracy},
          {"early_loss", a.early_loss}};
}

namespace detail {

inline double loss_at_fraction(const std::vector<TraceRecord>& trace,
                               double fraction) {
  if (trace.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto idx = static_cast<std::size_t>(
      std::max(0.0, fraction * static_cast<double>(trace.size()) - 1.0));
  return trace[std::min(idx, trace.size() - 1)].train_loss;
}

// A diverged run (non-finite loss) scores +inf loss and zero accuracy.
inline void run_arm(ArmResult& arm, const Objective& objective,
                    const TrainingConfig& tc) {
  try {
    const TrainingResult tr = run_training(objective, tc);
    arm.final_loss.push_back(tr.run.final_eval->loss);
    arm.final_accuracy.push_back(tr.run.final_eval->accuracy.value_or(0.0));
    arm.early_loss.push_back(loss_at_fraction(tr.run.state.trace, 0.25));
  } catch (const TrainingAborted&) {
    const double inf = std::numeric_limits<double>::infinity();
    arm.final_loss.push_back(inf);
    arm.final_accuracy.push_back(0.0);
    arm.early_loss.push_back(inf);
  } catch (const EvaluationFailure&) {
    const double inf = std::numeric_limits<double>::infinity();
    arm.final_loss.push_back(inf);
    arm.final_accuracy.push_back(0.0);
    arm.early_loss.push_back(inf);
  }
}

inline std::size_t best_arm(const std::vector<ArmResult>& arms) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < arms.size(); ++a) {
    if (arms[a].mean_loss() < arms[best].mean_loss()) best = a;
  }
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Clip-threshold sweep: thresholds delta^(k/10) for each k plus no clipping.

struct ThresholdSweepConfig {
  ObjectiveSpec objective;
  TrainingConfig training;
  std::vector<int> ks{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

inline VerificationReport threshold_sweep(const ThresholdSweepConfig& cfg) {
  const std::size_t d = delta(cfg.training.shape, cfg.training.variant);
  std::vector<ArmResult> arms;
  for (int k : cfg.ks) {
    arms.push_back({"k=" + std::to_string(k), {}, {}, {}});
  }
  arms.push_back({"no-clip", {}, {}, {}});
  for (std::uint64_t seed : cfg.seeds) {
    ObjectiveSpec os = cfg.objective;
    os.seed = seed;
    const auto objective = make_objective(os);
    for (std::size_t a = 0; a < arms.size(); ++a) {
      TrainingConfig tc = cfg.training;
      tc.zo.seed = seed;
      if (a < cfg.ks.size()) {
        tc.clip = true;
        tc.clip_threshold =
            std::pow(static_cast<double>(d), cfg.ks[a] / 10.0);
      } else {
        tc.clip = false;
      }
      detail::run_arm(arms[a], *objective, tc);
    }
  }
  const ArmResult& best = arms[detail::best_arm(arms)];
  const ArmResult* sqrt_arm = nullptr;
  for (std::size_t a = 0; a < cfg.ks.size(); ++a) {
    if (cfg.ks[a] == 5) sqrt_arm = &arms[a];
  }
  const ArmResult* k0_arm = nullptr;
  for (std::size_t a = 0; a < cfg.ks.size(); ++a) {
    if (cfg.ks[a] == 0) k0_arm = &arms[a];
  }
  const ArmResult& no_clip = arms.back();

  VerificationReport r;
  r.name = "threshold-sweep";
  r.samples = cfg.seeds.size();
  r.seeds = cfg.seeds;
  r.tolerance =
      "mean final loss of k=5 within 1 pooled SD (k=5 vs best arm) of the "
      "best arm and below no-clip";
  for (const auto& a : arms) r.estimates.push_back(a.mean_loss());
  r.details["delta"] = d;
  r.details["best_arm"] = best.label;
  nlohmann::json arm_json = nlohmann::json::array();
  for (const auto& a : arms) arm_json.push_back(to_json(a));
  r.details["arms"] = arm_json;
  if (!sqrt_arm) {
    r.details["note"] = "k=5 not in sweep";
    r.pass = false;
    return r;
  }
  const double sd = pooled_sd(*sqrt_arm, best);
  r.details["pooled_sd"] = sd;
  const bool near_best = sqrt_arm->mean_loss() <= best.mean_loss() + sd;
  const bool beats_no_clip = sqrt_arm->mean_loss() < no_clip.mean_loss();
  r.pass = near_best && beats_no_clip;
  r.details["sqrt_delta_near_best"] = near_best;
  r.details["sqrt_delta_beats_no_clip"] = beats_no_clip;
  if (k0_arm) {
    std::uint64_t slower = 0;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
      if (k0_arm->early_loss[s] > sqrt_arm->early_loss[s]) ++slower;
    }
    r.details["k0_slower_than_k5_seeds"] = slower;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Module ablation: {diagonal, sharing, clipping} on the low-rank base, plus
// the Standard (direct intrinsic vector) baseline with clipping.

struct AblationConfig {
  ObjectiveSpec objective;
  TrainingConfig training;  // variant and clip are overridden per arm
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

struct AblationArm {
  bool diag;
  bool share;
  bool clip;
  VariantKind variant;
  std::string label;
};

inline std::vector<AblationArm> ablation_arms() {
  std::vector<AblationArm> arms;
  for (int mask = 0; mask < 8; ++mask) {
    const bool diag = mask & 1, share = mask & 2, clip = mask & 4;
    VariantKind v = diag ? (share ? VariantKind::Zip : VariantKind::LowRankDiag)
                         : (share ? VariantKind::LowRankShare
                                  : VariantKind::LowRank);
    std::string label = std::string("diag=") + (diag ? "1" : "0") +
                        " share=" + (share ? "1" : "0") +
                        " clip=" + (clip ? "1" : "0");
    arms.push_back({diag, share, clip, v, label});
  }
  arms.push_back({false, false, true, VariantKind::Standard, "standard clip=1"});
  return arms;
}

inline VerificationReport ablation_grid(const AblationConfig& cfg) {
  const auto specs = ablation_arms();
  std::vector<ArmResult> arms;
  for (const auto& s : specs) arms.push_back({s.label, {}, {}, {}});
  for (std::uint64_t seed : cfg.seeds) {
    ObjectiveSpec os = cfg.objective;
    os.seed = seed;
    const auto objective = make_objective(os);
    for (std::size_t a = 0; a < specs.size(); ++a) {
      TrainingConfig tc = cfg.training;
      tc.zo.seed = seed;
      tc.variant = specs[a].variant;
      tc.clip = specs[a].clip;
      tc.clip_threshold.reset();
      detail::run_arm(arms[a], *objective, tc);
    }
  }
  const ArmResult& best = arms[detail::best_arm(arms)];
  const ArmResult& all_on = arms[7];
  const double sd = pooled_sd(all_on, best);
  const ArmResult& all_off = arms[0];
  std::uint64_t wins = 0;
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    if (all_on.final_loss[s] < all_off.final_loss[s]) ++wins;
  }
  VerificationReport r;
  r.name = "ablation";
  r.samples = cfg.seeds.size();
  r.seeds = cfg.seeds;
  r.tolerance = "all-on mean final loss within 1 pooled SD (all-on vs best arm) of the "
      "best arm";
  for (const auto& a : arms) r.estimates.push_back(a.mean_loss());
  r.pass = all_on.mean_loss() <= best.mean_loss() + sd;
  r.details["pooled_sd"] = sd;
  r.details["best_arm"] = best.label;
  r.details["all_on_beats_all_off_seeds"] = wins;
  nlohmann::json arm_json = nlohmann::json::array();
  for (const auto& a : arms) arm_json.push_back(to_json(a));
  r.details["arms"] = arm_json;
  return r;
}

}  // namespace zipzo
