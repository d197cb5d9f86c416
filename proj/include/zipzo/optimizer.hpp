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

// Clipped zeroth-order SGD and the baselines it is compared against.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "zipzo/batch.hpp"
#include "zipzo/errors.hpp"
#include "zipzo/estimator.hpp"
#include "zipzo/objectives.hpp"
#include "zipzo/random.hpp"
#include "zipzo/reparam.hpp"
#include "zipzo/text.hpp"
#include "zipzo/transforms.hpp"

namespace zipzo {

// eta_t = a1 / (1 + t)^lr_decay, c_t = c1 / (1 + t)^pm_decay.
struct GainSchedule {
  double a1 = 0.01;
  double lr_decay = 0.3;
  double c1 = 0.01;
  double pm_decay = 0.1;

  void validate() const {
    if (!(a1 > 0.0) || !(c1 > 0.0) || !(lr_decay >= 0.0) ||
        !(pm_decay >= 0.0)) {
      throw ContractViolation("gain schedule: need a1, c1 > 0, decays >= 0");
    }
  }

  friend bool operator==(const GainSchedule&, const GainSchedule&) = default;
};

struct Gains {
  double lr;
  double pm;
};

inline Gains gains(const GainSchedule& schedule, std::uint64_t t) {
  const double base = 1.0 + static_cast<double>(t);
  return {schedule.a1 / std::pow(base, schedule.lr_decay),
          schedule.c1 / std::pow(base, schedule.pm_decay)};
}

// alpha = min(threshold / ||g||, 1); a zero estimate gets alpha = 1.
inline double clip_coefficient_at(const Eigen::VectorXd& g_hat,
                                  double threshold) {
  const double norm = g_hat.norm();
  if (norm == 0.0) return 1.0;
  return std::min(threshold / norm, 1.0);
}

inline double clip_coefficient(const Eigen::VectorXd& g_hat,
                               std::size_t delta) {
  if (delta < 1) throw ContractViolation("clip: delta must be >= 1");
  return clip_coefficient_at(g_hat, std::sqrt(static_cast<double>(delta)));
}

struct ClipPolicy {
  bool enabled = false;
  double threshold = std::numeric_limits<double>::infinity();

  static ClipPolicy off() { return {}; }
  static ClipPolicy at(double threshold) { return {true, threshold}; }
  static ClipPolicy intrinsic(std::size_t delta) {
    return at(std::sqrt(static_cast<double>(delta)));
  }

  double coefficient(const Eigen::VectorXd& g_hat) const {
    return enabled ? clip_coefficient_at(g_hat, threshold) : 1.0;
  }
};

struct TraceRecord {
  std::uint64_t step = 0;
  std::uint64_t queries_used = 0;
  double train_loss = 0.0;
  std::optional<double> eval_loss;
  std::optional<double> eval_accuracy;
  double alpha = 1.0;
  double grad_norm = 0.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

// Deterministic minibatches: each epoch is a seeded shuffle of the training
// split, cut into floor(n / b) batches. Batch t depends on (seed, t) only.
// A schedule over an empty dataset always yields the full-data batch.
class BatchSchedule {
 public:
  BatchSchedule() = default;
  BatchSchedule(std::size_t dataset_size, std::size_t batch_size,
                std::uint64_t seed)
      : n_(dataset_size),
        b_(std::max<std::size_t>(1, std::min(batch_size, dataset_size))),
        seed_(seed) {}

  std::size_t batch_size() const noexcept { return n_ ? b_ : 0; }

  Batch at(std::uint64_t step) const {
    Batch out;
    out.id = step;
    if (n_ == 0) return out;
    const std::uint64_t per_epoch = n_ / b_;
    const std::uint64_t epoch = step / per_epoch;
    const std::uint64_t k = step % per_epoch;
    RngStream rng(derive_seed(seed_, seed_tag::kBatches, epoch));
    const auto perm = rng.permutation(n_);
    out.indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(k * b_),
                       perm.begin() + static_cast<std::ptrdiff_t>((k + 1) * b_));
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::size_t b_ = 1;
  std::uint64_t seed_ = 0;
};

struct OptimizerState {
  Eigen::VectorXd x;
  std::uint64_t step = 0;
  QueryLedger ledger;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> trace;
};

// Objective failure mid-run. Holds the last good state and its trace.
class TrainingAborted : public Error {
 public:
  TrainingAborted(const std::string& what, OptimizerState state)
      : Error(what), state_(std::move(state)) {}
  const OptimizerState& state() const noexcept { return state_; }

 private:
  OptimizerState state_;
};

// One clipped ZO-SGD step applied in place. On any error `state` is left
// exactly as it was, including its ledger.
template <LossFunction F>
void advance(OptimizerState& state, const F& f, const GainSchedule& schedule,
             std::size_t n_samples, const Batch& batch,
             const ClipPolicy& clip = {},
             const EstimatorOptions& options = {}) {
  const Gains g = gains(schedule, state.step);
  QueryLedger ledger = state.ledger;
  const GradientEstimate est =
      n_spsa(f, state.x, g.pm, n_samples, batch, ledger,
             PerturbationKey{state.seed, state.step}, options);
  const double alpha = clip.coefficient(est.g_hat);
  state.x -= (g.lr * alpha) * est.g_hat;
  state.ledger = ledger;
  state.step += 1;
  TraceRecord rec;
  rec.step = state.step;
  rec.queries_used = state.ledger.used();
  rec.train_loss = est.mean_loss;
  rec.alpha = alpha;
  rec.grad_norm = est.g_hat.norm();
  state.trace.push_back(rec);
}

// Copying form of advance(): `state` is never modified.
template <LossFunction F>
OptimizerState zo_step(const OptimizerState& state, const F& f,
                       const GainSchedule& schedule, std::size_t n_samples,
                       const Batch& batch, const ClipPolicy& clip = {},
                       const EstimatorOptions& options = {}) {
  OptimizerState next = state;
  advance(next, f, schedule, n_samples, batch, clip, options);
  return next;
}

struct EvalResult {
  double loss = 0.0;
  std::optional<double> accuracy;
};

using EvalHook = std::function<EvalResult(const Eigen::VectorXd&)>;

struct ZoRunConfig {
  GainSchedule schedule;
  std::size_t n_spsa = 5;
  std::uint64_t budget = 5000;
  std::uint64_t seed = 1;
  ClipPolicy clip;
  // Evaluate every `eval_every` training queries (0 disables periodic passes;
  // the initial and final passes always run when a hook is given).
  std::uint64_t eval_every = 0;
  // Stop after this many steps even if budget remains (0 = no limit).
  std::uint64_t max_steps = 0;
  EstimatorOptions estimator;
};

struct RunResult {
  OptimizerState state;
  // Evaluation passes, one query each, never drawn from the training budget.
  QueryLedger eval_ledger{std::numeric_limits<std::uint64_t>::max()};
  std::optional<EvalResult> initial_eval;
  std::optional<EvalResult> final_eval;
};

// Generic ZO-SGD loop: steps until the ledger cannot fund another 2N
// estimate. Pass `resume` to continue from a checkpointed state.
template <LossFunction F>
RunResult run_zo(const F& f, const Eigen::VectorXd& x0,
                 const BatchSchedule& batches, const ZoRunConfig& cfg,
                 const EvalHook& eval = {},
                 std::optional<OptimizerState> resume = std::nullopt) {
  cfg.schedule.validate();
  if (cfg.n_spsa < 1) throw ContractViolation("run: N must be >= 1");
  const std::uint64_t per_step = 2 * static_cast<std::uint64_t>(cfg.n_spsa);
  RunResult out;
  if (resume) {
    out.state = std::move(*resume);
  } else {
    if (cfg.budget < per_step) {
      throw ContractViolation("run: budget " + std::to_string(cfg.budget) +
                              " cannot fund one estimate of " +
                              std::to_string(per_step) + " queries");
    }
    out.state.x = x0;
    out.state.ledger = QueryLedger(cfg.budget);
    out.state.seed = cfg.seed;
  }
  auto evaluate = [&](const Eigen::VectorXd& x) {
    out.eval_ledger.charge();
    return eval(x);
  };
  if (eval && !resume) out.initial_eval = evaluate(out.state.x);

  const std::uint64_t start_step = out.state.step;
  while (out.state.ledger.can_afford(per_step)) {
    if (cfg.max_steps && out.state.step - start_step >= cfg.max_steps) break;
    const std::uint64_t before = out.state.ledger.used();
    try {
      advance(out.state, f, cfg.schedule, cfg.n_spsa,
              batches.at(out.state.step), cfg.clip, cfg.estimator);
    } catch (const EvaluationFailure& e) {
      throw TrainingAborted(e.what(), out.state);
    }
    const std::uint64_t after = out.state.ledger.used();
    if (eval && cfg.eval_every && after / cfg.eval_every > before / cfg.eval_every) {
      const EvalResult r = evaluate(out.state.x);
      out.state.trace.back().eval_loss = r.loss;
      out.state.trace.back().eval_accuracy = r.accuracy;
    }
  }
  if (eval) out.final_eval = evaluate(out.state.x);
  return out;
}

// Full-training-split loss plus held-out accuracy for classifiers.
inline EvalHook make_eval_hook(const Objective& objective,
                               std::function<Eigen::VectorXd(const Eigen::VectorXd&)>
                                   to_model = {}) {
  return [&objective, to_model](const Eigen::VectorXd& x) {
    const Eigen::VectorXd model_x = to_model ? to_model(x) : x;
    EvalResult r;
    r.loss = objective.loss(model_x, Batch{});
    if (objective.is_classifier()) {
      const auto test = objective.test_indices();
      r.accuracy = objective.accuracy(model_x, test);
    }
    return r;
  };
}

// Maps a flat intrinsic vector to the model's flattened p x m prompt.
class PromptMap {
 public:
  PromptMap(PromptShape shape, VariantKind variant, Eigen::MatrixXd theta0,
            std::vector<TokenProjection> projections)
      : shape_(shape),
        variant_(variant),
        theta0_(std::move(theta0)),
        projections_(std::move(projections)) {}

  Eigen::VectorXd operator()(const Eigen::VectorXd& flat) const {
    const FullPrompt prompt =
        reconstruct_prompt(unflatten(flat, shape_, variant_), theta0_,
                           projections_);
    return Eigen::Map<const Eigen::VectorXd>(prompt.theta.data(),
                                             prompt.theta.size());
  }

  const PromptShape& shape() const noexcept { return shape_; }
  VariantKind variant() const noexcept { return variant_; }

 private:
  PromptShape shape_;
  VariantKind variant_;
  Eigen::MatrixXd theta0_;
  std::vector<TokenProjection> projections_;
};

struct TrainingConfig {
  PromptShape shape;
  VariantKind variant = VariantKind::Zip;
  ProjectionKind projection = ProjectionKind::Fastfood;
  ZoRunConfig zo;  // zo.clip is derived from the two fields below
  bool clip = true;
  std::optional<double> clip_threshold;  // default sqrt(delta)
  std::size_t batch_size = 128;
};

struct TrainingResult {
  RunResult run;
  IntrinsicParams params;
  std::size_t delta = 0;
};

inline Eigen::MatrixXd prompt_base(const Objective& objective,
                                   const PromptShape& shape) {
  if (objective.dim() != shape.full_dim()) {
    throw InvalidDimensions("training: objective dim " +
                            std::to_string(objective.dim()) +
                            " is not p * m = " +
                            std::to_string(shape.full_dim()));
  }
  const Eigen::VectorXd x0 = objective.initial_point();
  return Eigen::Map<const Eigen::MatrixXd>(
      x0.data(), static_cast<Eigen::Index>(shape.p),
      static_cast<Eigen::Index>(shape.m));
}

// The full reparameterized training loop: init, then clipped ZO-SGD on the
// flat intrinsic vector until the budget is spent.
inline TrainingResult run_training(
    const Objective& objective, const TrainingConfig& cfg,
    std::optional<OptimizerState> resume = std::nullopt) {
  cfg.shape.validate();
  const std::size_t d = delta(cfg.shape, cfg.variant);
  const PromptMap map(cfg.shape, cfg.variant, prompt_base(objective, cfg.shape),
                      make_token_projections(cfg.projection, cfg.zo.seed,
                                             cfg.shape.p, cfg.shape.q,
                                             cfg.shape.m));
  ZoRunConfig zo = cfg.zo;
  zo.clip = !cfg.clip ? ClipPolicy::off()
            : cfg.clip_threshold ? ClipPolicy::at(*cfg.clip_threshold)
                                 : ClipPolicy::intrinsic(d);
  const auto loss = [&](const Eigen::VectorXd& x, const Batch& b) {
    return objective.loss(map(x), b);
  };
  const BatchSchedule batches(objective.train_size(), cfg.batch_size,
                              cfg.zo.seed);
  const Eigen::VectorXd x0 =
      flatten(init_intrinsic(cfg.zo.seed, cfg.shape, cfg.variant));
  TrainingResult out;
  out.delta = d;
  out.run = run_zo(loss, x0, batches, zo,
                   make_eval_hook(objective, std::cref(map)), std::move(resume));
  out.params = unflatten(out.run.state.x, cfg.shape, cfg.variant);
  return out;
}

// ZO-SGD directly on the objective's parameters: no reparameterization and
// no clipping.
inline RunResult run_naive_zo(const Objective& objective, ZoRunConfig cfg,
                              std::size_t batch_size = 128) {
  cfg.clip = ClipPolicy::off();
  const BatchSchedule batches(objective.train_size(), batch_size, cfg.seed);
  const auto loss = [&](const Eigen::VectorXd& x, const Batch& b) {
    return objective.loss(x, b);
  };
  return run_zo(loss, objective.initial_point(), batches, cfg,
                make_eval_hook(objective));
}

struct FoResult {
  Eigen::VectorXd x;
  double initial_loss = 0.0;
  // One record per step; queries_used counts one query per step.
  std::vector<TraceRecord> trace;
  std::optional<EvalResult> final_eval;
};

// Plain gradient descent on minibatches. train_loss in record t is the batch
// loss after update t.
inline FoResult run_fo_sgd(const Objective& objective,
                           const Eigen::VectorXd& x0, double lr,
                           std::uint64_t steps, std::uint64_t seed,
                           std::size_t batch_size = 128) {
  if (!objective.has_gradient()) {
    throw Unsupported("first-order baseline needs an analytic gradient");
  }
  const BatchSchedule batches(objective.train_size(), batch_size, seed);
  FoResult out;
  out.x = x0;
  out.initial_loss = objective.loss(x0, batches.at(0));
  out.trace.reserve(steps);
  for (std::uint64_t t = 0; t < steps; ++t) {
    const Batch batch = batches.at(t);
    const Eigen::VectorXd g = objective.gradient(out.x, batch);
    out.x -= lr * g;
    TraceRecord rec;
    rec.step = t + 1;
    rec.queries_used = t + 1;
    rec.train_loss = objective.loss(out.x, batch);
    rec.grad_norm = g.norm();
    out.trace.push_back(rec);
  }
  out.final_eval = make_eval_hook(objective)(out.x);
  return out;
}

// Checkpoint record:
//   zipzo-checkpoint 1
//   step <t>
//   seed <s>
//   ledger <used> <budget>
//   params <n>
//   <n numbers>
// followed, for reparameterized runs, by an intrinsic record (see
// write_intrinsic) that carries the shape header.
inline void write_checkpoint(std::ostream& os, const OptimizerState& state,
                             const std::optional<IntrinsicParams>& params = {}) {
  os << "zipzo-checkpoint 1\n"
     << "step " << state.step << '\n'
     << "seed " << state.seed << '\n'
     << "ledger " << state.ledger.used() << ' ' << state.ledger.budget() << '\n'
     << "params " << state.x.size() << '\n';
  for (Eigen::Index i = 0; i < state.x.size(); ++i) {
    os << text::format_double(state.x[i]) << '\n';
  }
  if (params) write_intrinsic(os, *params);
}

struct Checkpoint {
  OptimizerState state;
  std::optional<IntrinsicParams> params;
};

inline Checkpoint read_checkpoint(std::istream& is) {
  auto fail = [](const std::string& why) -> Checkpoint {
    throw InvalidDimensions("checkpoint: " + why);
  };
  std::string word;
  int version = 0;
  if (!(is >> word >> version) || word != "zipzo-checkpoint" || version != 1) {
    return fail("bad header");
  }
  Checkpoint out;
  std::uint64_t used = 0, budget = 0;
  std::size_t count = 0;
  if (!(is >> word) || word != "step" || !(is >> out.state.step)) {
    return fail("bad step line");
  }
  if (!(is >> word) || word != "seed" || !(is >> out.state.seed)) {
    return fail("bad seed line");
  }
  if (!(is >> word) || word != "ledger" || !(is >> used >> budget)) {
    return fail("bad ledger line");
  }
  if (!(is >> word) || word != "params" || !(is >> count)) {
    return fail("bad params line");
  }
  out.state.ledger = QueryLedger(budget, used);
  out.state.x.resize(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    if (!(is >> word)) return fail("truncated params");
    const auto v = text::parse_double(word);
    if (!v) return fail("bad number " + word);
    out.state.x[static_cast<Eigen::Index>(i)] = *v;
  }
  is >> std::ws;
  if (is.peek() != std::char_traits<char>::eof()) {
    out.params = read_intrinsic(is);
    if (flatten(*out.params) != out.state.x) {
      return fail("intrinsic record disagrees with params");
    }
  }
  return out;
}

}  // namespace zipzo
