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

// Standalone acceptance gate. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "zipzo/harness/commands.hpp"
#include "zipzo/harness/config.hpp"
#include "zipzo/objectives.hpp"
#include "zipzo/optimizer.hpp"
#include "zipzo/random.hpp"
#include "zipzo/reparam.hpp"
#include "zipzo/verify.hpp"

namespace {

using namespace zipzo;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> body;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

bool report_passed(const std::optional<VerificationReport>& r) {
  return r && r->pass.value_or(false);
}

// Summary details without the per-run and per-arm arrays, followed by the
// mean final loss of each arm.
std::string report_detail(const VerificationReport& r) {
  nlohmann::json summary = r.details;
  summary.erase("runs");
  summary.erase("arms");
  std::string out = summary.dump();
  if (r.details.contains("arms")) {
    out += "; mean final loss:";
    for (const auto& arm : r.details["arms"]) {
      out += " " + arm["label"].get<std::string>() + "=" +
             fmt(arm["mean_final_loss"].get<double>());
    }
  }
  return out;
}

Outcome parameter_count() {
  const PromptShape reference = PromptShape::from_intrinsic_dim(512, 8, 500, 5);
  bool ok = reference.q == 62 && delta(reference, VariantKind::Zip) == 417;
  std::size_t checked = 0, mismatches = 0;
  for (std::size_t q = 1; q <= 16; ++q) {
    for (std::size_t m = 1; m <= 16; ++m) {
      for (std::size_t r = 1; r <= 16; ++r) {
        const PromptShape s{16, m, q, r};
        ++checked;
        if (delta(s, VariantKind::Zip) != r * (q + m + 1) + q) ++mismatches;
        if (r > std::min(q, m)) continue;
        const auto params = init_intrinsic(q * 257 + m * 17 + r, s,
                                           VariantKind::Zip);
        const std::size_t blocks = static_cast<std::size_t>(
            params.U.size() + params.s.size() + params.V.size() +
            params.u.size());
        if (blocks != delta(s, VariantKind::Zip) ||
            static_cast<std::size_t>(flatten(params).size()) != blocks) {
          ++mismatches;
        }
      }
    }
  }
  ok = ok && mismatches == 0;
  return {ok, "delta(62, 8, 5) = " +
                  std::to_string(delta(reference, VariantKind::Zip)) + ", " +
                  std::to_string(checked) + " shapes, " +
                  std::to_string(mismatches) + " mismatches"};
}

Outcome unbiasedness() {
  const auto clean = verify_unbiasedness(20, 1, 1e-5, 100000, 1);
  const auto biased =
      verify_unbiasedness(20, 1, 1e-5, 100000, 1, Injection::OneSidedSigns);
  const bool ok = clean.pass.value_or(false) && !biased.pass.value_or(true);
  return {ok, "max |z| clean " + fmt(clean.details["max_abs_z"].get<double>()) +
                  ", one-sided control " +
                  fmt(biased.details["max_abs_z"].get<double>()) +
                  (biased.pass.value_or(true) ? " (not detected)"
                                              : " (detected)")};
}

Outcome second_moment() {
  bool ok = true;
  std::string detail;
  for (std::size_t d : {8u, 32u, 128u}) {
    const auto r = verify_second_moment(d, 1, 1e-5, 100000, 1);
    ok = ok && r.pass.value_or(false);
    if (!detail.empty()) detail += ", ";
    detail += "d=" + std::to_string(d) + " ratio " + fmt(r.estimates[0]);
  }
  return {ok, detail};
}

Outcome clipping() {
  RngStream rng(derive_seed(4, 0));
  double worst = 0.0;
  std::size_t alpha_violations = 0, clipped = 0, unclipped = 0;
  for (double d : {1.0, 417.0, 1e4}) {
    const double bound = std::sqrt(d);
    for (int i = 0; i < 10000; ++i) {
      const Eigen::Index n = 1 + static_cast<Eigen::Index>(i % 64);
      Eigen::VectorXd g(n);
      for (Eigen::Index j = 0; j < n; ++j) g[j] = rng.normal();
      g *= bound * std::pow(10.0, 6.0 * rng.uniform() - 3.0) / g.norm();
      const double alpha =
          clip_coefficient(g, static_cast<std::size_t>(d));
      const double expected = std::min(g.norm(), bound);
      worst = std::max(worst,
                       std::abs((alpha * g).norm() - expected) / expected);
      if (g.norm() <= bound) {
        ++unclipped;
        if (alpha != 1.0) ++alpha_violations;
      } else {
        ++clipped;
      }
    }
  }
  const bool ok = worst <= 1e-12 && alpha_violations == 0 && clipped > 0 &&
                  unclipped > 0;
  return {ok, "max rel error " + fmt(worst) + ", " + std::to_string(clipped) +
                  " clipped, " + std::to_string(unclipped) +
                  " unclipped, alpha != 1 below bound: " +
                  std::to_string(alpha_violations)};
}

harness::RunConfig reference_config() {
  harness::RunConfig cfg;
  cfg.seeds = {1, 2, 3, 4, 5};
  return cfg;
}

Outcome dimension_scaling() {
  harness::RunConfig cfg = harness::load(std::string(ZIPZO_CONFIG_DIR) +
                                         "/dim-scaling.cfg");
  const auto r = harness::run_check(cfg, "dim-scaling");
  return {report_passed(r), report_detail(*r)};
}

Outcome gap_bridging() {
  const auto cfg = reference_config();
  harness::validate_training(cfg);
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed : cfg.seeds) {
    const auto objective = make_objective(harness::objective_for(cfg, seed));
    const auto zip = harness::detail::run_zip(cfg, *objective, seed, "zip");
    const auto naive = harness::detail::run_naive(cfg, *objective, seed);
    const double zl = zip.final_eval ? zip.final_eval->loss : INFINITY;
    const double nl = naive.final_eval ? naive.final_eval->loss : INFINITY;
    wins += zl < nl;
    if (!detail.empty()) detail += ", ";
    detail += "seed " + std::to_string(seed) + " zip " + fmt(zl) +
              " naive " + fmt(nl);
  }
  return {wins >= 4, std::to_string(wins) + "/5 wins; " + detail};
}

Outcome threshold_sweep_check() {
  const auto r = harness::run_check(reference_config(), "threshold-sweep");
  return {report_passed(r), report_detail(*r)};
}

Outcome ablation_check() {
  const auto r = harness::run_check(reference_config(), "ablation");
  return {report_passed(r), report_detail(*r)};
}

Eigen::VectorXd random_offset(RngStream& rng, std::size_t n, double scale) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = scale * rng.normal();
  return v;
}

// Max over coordinates of |fd - g| relative to max |g|.
double fd_error(const Objective& obj, const Eigen::VectorXd& x,
                const Batch& batch, const std::vector<Eigen::Index>& coords) {
  const Eigen::VectorXd g = obj.gradient(x, batch);
  const double h = 1e-5;
  double err = 0.0;
  for (Eigen::Index i : coords) {
    Eigen::VectorXd plus = x, minus = x;
    plus[i] += h;
    minus[i] -= h;
    const double fd = (obj.loss(plus, batch) - obj.loss(minus, batch)) / (2 * h);
    err = std::max(err, std::abs(fd - g[i]));
  }
  return err / std::max(g.cwiseAbs().maxCoeff(), 1e-8);
}

Outcome gradient_integrity() {
  struct Case {
    std::string label;
    ObjectiveSpec spec;
    std::size_t coords;  // 0: every coordinate
  };
  std::vector<Case> cases;
  ObjectiveSpec quad;
  quad.kind = ObjectiveKind::Quadratic;
  cases.push_back({"quadratic", quad, 0});
  ObjectiveSpec soft;
  soft.kind = ObjectiveKind::SoftmaxRegression;
  cases.push_back({"softmax", soft, 0});
  ObjectiveSpec small;
  small.p = 32;
  small.m = 4;
  small.hidden = 16;
  cases.push_back({"surrogate-small", small, 0});
  cases.push_back({"surrogate", ObjectiveSpec{}, 64});

  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const auto obj = make_objective(c.spec);
    RngStream rng(derive_seed(9, static_cast<std::uint64_t>(c.spec.kind)));
    Batch batch;
    if (obj->train_size()) {
      for (std::size_t i = 0; i < 32; ++i) batch.indices.push_back(3 * i);
      batch.id = 1;
    }
    double worst = 0.0;
    for (int point = 0; point < 20; ++point) {
      const Eigen::VectorXd x =
          obj->initial_point() + random_offset(rng, obj->dim(), 0.5);
      std::vector<Eigen::Index> coords;
      if (c.coords == 0) {
        for (Eigen::Index i = 0; i < x.size(); ++i) coords.push_back(i);
      } else {
        for (std::size_t k = 0; k < c.coords; ++k) {
          coords.push_back(static_cast<Eigen::Index>(
              rng.below(static_cast<std::uint64_t>(x.size()))));
        }
      }
      worst = std::max(worst, fd_error(*obj, x, batch, coords));
    }
    ok = ok && worst <= 1e-5;
    if (!detail.empty()) detail += ", ";
    detail += c.label + " " + fmt(worst);
  }
  return {ok, "max rel error: " + detail};
}

// Forwards to another objective and counts minibatch loss evaluations.
class CountingObjective final : public Objective {
 public:
  explicit CountingObjective(const Objective& inner)
      : Objective(inner.spec()), inner_(inner) {}

  std::size_t dim() const override { return inner_.dim(); }
  double loss(const Eigen::VectorXd& x, const Batch& batch) const override {
    if (!batch.indices.empty()) ++training_calls_;
    return inner_.loss(x, batch);
  }
  bool has_gradient() const override { return inner_.has_gradient(); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x,
                           const Batch& batch) const override {
    return inner_.gradient(x, batch);
  }
  bool is_classifier() const override { return inner_.is_classifier(); }
  double accuracy(const Eigen::VectorXd& x,
                  std::span<const std::size_t> idx) const override {
    return inner_.accuracy(x, idx);
  }
  std::size_t train_size() const override { return inner_.train_size(); }
  std::size_t test_size() const override { return inner_.test_size(); }
  Eigen::VectorXd initial_point() const override {
    return inner_.initial_point();
  }

  std::uint64_t training_calls() const { return training_calls_; }

 private:
  const Objective& inner_;
  mutable std::atomic<std::uint64_t> training_calls_{0};
};

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  harness::RunConfig cfg;
  cfg.objective.p = 32;
  cfg.objective.m = 4;
  cfg.objective.hidden = 16;
  cfg.objective.train_samples = 256;
  cfg.objective.test_samples = 64;
  cfg.intrinsic_dim = 32;
  cfg.rank = 2;
  cfg.budget = 503;
  cfg.batch_size = 64;
  cfg.eval_every = 100;
  cfg.seeds = {1, 2};

  const fs::path root = fs::temp_directory_path() / "zipzo_acceptance";
  fs::remove_all(root);
  std::vector<std::string> files;
  std::ostringstream log;
  std::vector<fs::path> dirs;
  for (std::size_t workers : {1u, 2u, 4u}) {
    cfg.workers = workers;
    cfg.output_dir = (root / ("workers" + std::to_string(workers))).string();
    dirs.emplace_back(cfg.output_dir);
    const auto r = harness::compare_command(cfg, log);
    if (r.exit_code != harness::kExitOk) return {false, "compare failed"};
    if (files.empty()) {
      for (const auto& f : r.files) {
        if (f.ends_with(".tsv")) files.push_back(f);
      }
    }
  }
  std::size_t differing = 0;
  for (const auto& f : files) {
    const std::string ref = slurp(dirs[0] / f);
    for (std::size_t i = 1; i < dirs.size(); ++i) {
      differing += ref.empty() || slurp(dirs[i] / f) != ref;
    }
  }

  bool budget_ok = true;
  std::string budget_detail;
  for (std::size_t workers : {1u, 4u}) {
    cfg.workers = workers;
    const auto inner = make_objective(harness::objective_for(cfg, 1));
    const CountingObjective zip_obj(*inner);
    const auto zip = run_training(zip_obj, harness::training_config(cfg, 1));
    const CountingObjective naive_obj(*inner);
    const auto naive =
        run_naive_zo(naive_obj, harness::zo_config(cfg, 1), cfg.batch_size);
    const std::uint64_t per_step = 2 * cfg.n_spsa;
    for (const auto* run : {&zip.run, &naive}) {
      const CountingObjective& counter =
          run == &zip.run ? zip_obj : naive_obj;
      const std::uint64_t steps = run->state.step;
      budget_ok = budget_ok && steps == cfg.budget / per_step &&
                  counter.training_calls() == per_step * steps &&
                  run->state.ledger.used() == per_step * steps;
    }
    budget_detail = "steps " + std::to_string(zip.run.state.step) +
                    ", evaluations " + std::to_string(zip_obj.training_calls()) +
                    " (2N x steps = " +
                    std::to_string(per_step * zip.run.state.step) + ")";
  }
  fs::remove_all(root);
  return {differing == 0 && !files.empty() && budget_ok,
          std::to_string(files.size()) + " traces x 3 worker counts, " +
              std::to_string(differing) + " differ; " + budget_detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "parameter-count identity", 1.0, parameter_count},
      {2, "estimator unbiasedness", 30.0, unbiasedness},
      {3, "estimator second moment", 60.0, second_moment},
      {4, "clipping exactness", 5.0, clipping},
      {5, "dimension dependence", 300.0, dimension_scaling},
      {6, "gap bridging", 300.0, gap_bridging},
      {7, "threshold near-optimality", 900.0, threshold_sweep_check},
      {8, "ablation dominance", 1200.0, ablation_check},
      {9, "first-order oracle integrity", 10.0, gradient_integrity},
      {10, "determinism and budget law", 60.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
    const bool in_time = seconds < c.limit_seconds;
    const bool pass = out.pass && in_time;
    failed += !pass;
    std::printf("%s %d %s (%.2f s, limit %.0f s%s): %s\n",
                pass ? "PASS" : "FAIL", c.id, c.name.c_str(), seconds,
                c.limit_seconds, in_time ? "" : ", too slow",
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
