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

// N-SPSA gradient estimation with metered objective access.

#include <atomic>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "zipzo/batch.hpp"
#include "zipzo/errors.hpp"
#include "zipzo/random.hpp"

namespace zipzo {

template <class F>
concept LossFunction =
    requires(const F& f, const Eigen::VectorXd& x, const Batch& b) {
      { f(x, b) } -> std::convertible_to<double>;
    };

// Hard cap on objective evaluations. charge() is the only mutation during a
// run and is safe to call from several workers.
class QueryLedger {
 public:
  explicit QueryLedger(std::uint64_t budget = 0, std::uint64_t used = 0)
      : budget_(budget), used_(used) {
    if (used > budget) throw ContractViolation("ledger: used exceeds budget");
  }
  QueryLedger(const QueryLedger& other)
      : budget_(other.budget_), used_(other.used()) {}
  QueryLedger& operator=(const QueryLedger& other) {
    budget_ = other.budget_;
    used_.store(other.used(), std::memory_order_relaxed);
    return *this;
  }

  std::uint64_t budget() const noexcept { return budget_; }
  std::uint64_t used() const noexcept {
    return used_.load(std::memory_order_relaxed);
  }
  std::uint64_t remaining() const noexcept { return budget_ - used(); }
  bool can_afford(std::uint64_t n) const noexcept { return remaining() >= n; }

  // Consumes one evaluation or throws BudgetExceeded without consuming.
  void charge() {
    std::uint64_t cur = used_.load(std::memory_order_relaxed);
    do {
      if (cur >= budget_) throw BudgetExceeded(0, 1);
    } while (!used_.compare_exchange_weak(cur, cur + 1,
                                          std::memory_order_relaxed));
  }

 private:
  std::uint64_t budget_;
  std::atomic<std::uint64_t> used_;
};

// z = magnitude * signs with signs in {-1, +1}. The reciprocal is
// signs / magnitude, and magnitude is drawn so that magnitude * (1 /
// magnitude) == 1 holds exactly in double precision.
struct PerturbationDirection {
  double magnitude = 1.0;
  Eigen::VectorXd signs;

  Eigen::VectorXd z() const { return magnitude * signs; }
  Eigen::VectorXd reciprocal() const { return signs / magnitude; }
};

// a ~ Uniform(0, 1], signs i.i.d. fair. a values whose reciprocal does not
// round-trip are redrawn (this also excludes a == 0).
inline PerturbationDirection sample_perturbation(RngStream& rng,
                                                 std::size_t dim) {
  PerturbationDirection out;
  double a;
  do {
    a = rng.uniform_open_zero();
  } while (a * (1.0 / a) != 1.0);
  out.magnitude = a;
  out.signs.resize(static_cast<Eigen::Index>(dim));
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    if (i % 64 == 0) word = rng.bits();
    out.signs[static_cast<Eigen::Index>(i)] = (word & 1) ? 1.0 : -1.0;
    word >>= 1;
  }
  return out;
}

// Perturbation n of step t under base seed s comes from the stream
// derive_seed(s, kPerturbation, t, n), independent of evaluation order.
struct PerturbationKey {
  std::uint64_t base_seed = 0;
  std::uint64_t step = 0;

  RngStream stream(std::uint64_t sample) const {
    return RngStream(
        derive_seed(base_seed, seed_tag::kPerturbation, step, sample));
  }
};

struct SpsaSample {
  Eigen::VectorXd gradient;
  double loss_plus = 0.0;
  double loss_minus = 0.0;
};

namespace detail {

template <LossFunction F>
double metered_eval(const F& f, const Eigen::VectorXd& x, const Batch& batch,
                    QueryLedger& ledger) {
  ledger.charge();
  const double v = static_cast<double>(f(x, batch));
  if (!std::isfinite(v)) {
    throw EvaluationFailure("objective returned a non-finite loss");
  }
  return v;
}

}  // namespace detail

// One central-difference estimate: (f(x + c z) - f(x - c z)) / (2c) * z^-1.
// Both evaluations see `batch`; exactly two queries are charged.
template <LossFunction F>
SpsaSample spsa_sample(const F& f, const Eigen::VectorXd& x,
                       const PerturbationDirection& z, double c,
                       const Batch& batch, QueryLedger& ledger) {
  if (!(c > 0.0)) throw ContractViolation("spsa: c must be positive");
  if (z.signs.size() != x.size()) {
    throw InvalidDimensions("spsa: perturbation length mismatch");
  }
  if (!ledger.can_afford(2)) throw BudgetExceeded(ledger.remaining(), 2);
  const Eigen::VectorXd step = c * z.z();
  SpsaSample out;
  out.loss_plus = detail::metered_eval(f, Eigen::VectorXd(x + step), batch,
                                       ledger);
  out.loss_minus = detail::metered_eval(f, Eigen::VectorXd(x - step), batch,
                                        ledger);
  out.gradient = ((out.loss_plus - out.loss_minus) / (2.0 * c)) *
                 z.reciprocal();
  return out;
}

struct GradientEstimate {
  Eigen::VectorXd g_hat;
  std::uint64_t queries_charged = 0;
  std::optional<std::vector<Eigen::VectorXd>> per_sample;
  // Mean of the 2N perturbed losses; a free proxy for f(x) on the batch.
  double mean_loss = 0.0;
};

struct EstimatorOptions {
  std::size_t workers = 1;
  bool keep_samples = false;
};

// Mean of N SPSA samples with fresh perturbations. All-or-nothing: the
// budget for 2N queries is checked before the first evaluation. Results are
// reduced in sample order, so the worker count never changes the output.
template <LossFunction F>
GradientEstimate n_spsa(const F& f, const Eigen::VectorXd& x, double c,
                        std::size_t n_samples, const Batch& batch,
                        QueryLedger& ledger, const PerturbationKey& key,
                        const EstimatorOptions& options = {}) {
  if (n_samples < 1) throw ContractViolation("n_spsa: N must be >= 1");
  const std::uint64_t needed = 2 * static_cast<std::uint64_t>(n_samples);
  if (!ledger.can_afford(needed)) {
    throw BudgetExceeded(ledger.remaining(), needed);
  }
  const std::uint64_t used_before = ledger.used();
  const auto dim = static_cast<std::size_t>(x.size());
  std::vector<SpsaSample> samples(n_samples);
  std::vector<std::exception_ptr> errors(n_samples);

  auto run_sample = [&](std::size_t n) {
    try {
      RngStream rng = key.stream(n);
      const PerturbationDirection z = sample_perturbation(rng, dim);
      samples[n] = spsa_sample(f, x, z, c, batch, ledger);
    } catch (...) {
      errors[n] = std::current_exception();
    }
  };

  const std::size_t workers = std::min(options.workers, n_samples);
  if (workers <= 1) {
    for (std::size_t n = 0; n < n_samples; ++n) run_sample(n);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t n = w; n < n_samples; n += workers) run_sample(n);
      });
    }
  }

  for (std::size_t n = 0; n < n_samples; ++n) {
    if (!errors[n]) continue;
    try {
      std::rethrow_exception(errors[n]);
    } catch (const BudgetExceeded&) {
      throw BudgetExceeded(ledger.remaining(), needed,
                           ledger.used() - used_before);
    }
  }

  GradientEstimate out;
  out.g_hat = Eigen::VectorXd::Zero(x.size());
  double loss_sum = 0.0;
  for (const auto& s : samples) {
    out.g_hat += s.gradient;
    loss_sum += s.loss_plus + s.loss_minus;
  }
  out.g_hat /= static_cast<double>(n_samples);
  out.mean_loss = loss_sum / static_cast<double>(needed);
  out.queries_charged = needed;
  if (options.keep_samples) {
    out.per_sample.emplace();
    out.per_sample->reserve(n_samples);
    for (auto& s : samples) out.per_sample->push_back(std::move(s.gradient));
  }
  return out;
}

}  // namespace zipzo
