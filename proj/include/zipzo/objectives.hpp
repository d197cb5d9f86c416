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

// Synthetic black-box objectives. Each one is immutable after construction,
// fully determined by its ObjectiveSpec, and exposes an analytic gradient so
// the first-order baseline can run on the same problem.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "zipzo/batch.hpp"
#include "zipzo/errors.hpp"
#include "zipzo/random.hpp"

namespace zipzo {

enum class ObjectiveKind { Quadratic, SoftmaxRegression, FrozenPromptSurrogate };

inline std::string_view to_string(ObjectiveKind k) noexcept {
  switch (k) {
    case ObjectiveKind::Quadratic: return "quadratic";
    case ObjectiveKind::SoftmaxRegression: return "softmax";
    case ObjectiveKind::FrozenPromptSurrogate: return "surrogate";
  }
  return "?";
}

inline ObjectiveKind parse_objective_kind(std::string_view s) {
  for (auto k : {ObjectiveKind::Quadratic, ObjectiveKind::SoftmaxRegression,
                 ObjectiveKind::FrozenPromptSurrogate}) {
    if (to_string(k) == s) return k;
  }
  throw Unsupported("unknown objective kind '" + std::string(s) + "'");
}

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::FrozenPromptSurrogate;
  std::uint64_t seed = 1;
  // quadratic
  std::size_t dim = 20;
  double kappa = 10.0;
  // classification data
  std::size_t classes = 8;
  std::size_t train_samples = 1024;
  std::size_t test_samples = 512;
  std::size_t feature_dim = 16;
  double noise = 1.0;
  double separation = 1.0;
  // surrogate
  std::size_t hidden = 64;
  std::size_t p = 512;
  std::size_t m = 8;
  double teacher_shift = 3.0;
  double head_gain = 4.0;
  // Weight of 1/2 ||theta - theta0||^2 added to the surrogate loss.
  double anchor = 0.1;

  friend bool operator==(const ObjectiveSpec&, const ObjectiveSpec&) = default;
};

class Objective {
 public:
  explicit Objective(ObjectiveSpec spec) : spec_(spec) {}
  virtual ~Objective() = default;

  const ObjectiveSpec& spec() const noexcept { return spec_; }

  virtual std::size_t dim() const = 0;
  virtual double loss(const Eigen::VectorXd& x, const Batch& batch) const = 0;
  virtual bool has_gradient() const { return true; }
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x,
                                   const Batch& batch) const = 0;

  virtual bool is_classifier() const { return false; }
  virtual double accuracy(const Eigen::VectorXd&,
                          std::span<const std::size_t>) const {
    throw Unsupported(std::string(to_string(spec_.kind)) +
                      " objective has no accuracy");
  }
  virtual std::size_t train_size() const { return 0; }
  virtual std::size_t test_size() const { return 0; }
  virtual Eigen::VectorXd initial_point() const {
    return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
  }

  std::vector<std::size_t> train_indices() const {
    std::vector<std::size_t> out(train_size());
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  std::vector<std::size_t> test_indices() const {
    std::vector<std::size_t> out(test_size());
    std::iota(out.begin(), out.end(), train_size());
    return out;
  }

  double operator()(const Eigen::VectorXd& x, const Batch& batch) const {
    return loss(x, batch);
  }

 protected:
  void check_dim(const Eigen::VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != dim()) {
      throw InvalidDimensions("objective: parameter length " +
                              std::to_string(x.size()) + ", expected " +
                              std::to_string(dim()));
    }
  }

 private:
  ObjectiveSpec spec_;
};

// f(x) = 1/2 (x - x*)^T H (x - x*), H = Q diag(lambda) Q^T with lambda
// log-spaced on [1, kappa] and Q a seeded random orthogonal matrix.
class QuadraticObjective final : public Objective {
 public:
  explicit QuadraticObjective(const ObjectiveSpec& spec) : Objective(spec) {
    const auto d = static_cast<Eigen::Index>(spec.dim);
    if (d < 1) throw InvalidDimensions("quadratic: dim must be >= 1");
    if (!(spec.kappa >= 1.0)) throw ContractViolation("quadratic: kappa < 1");
    RngStream rng(derive_seed(spec.seed, seed_tag::kObjective, 0));
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i < d; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j) {
      if (r(j, j) < 0) q.col(j) = -q.col(j);
    }
    eigenvalues_.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double t = d == 1 ? 0.0 : static_cast<double>(i) / (d - 1);
      eigenvalues_[i] = std::pow(spec.kappa, t);
    }
    hessian_ = q * eigenvalues_.asDiagonal() * q.transpose();
    hessian_ = 0.5 * (hessian_ + hessian_.transpose()).eval();
    minimizer_.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) minimizer_[i] = rng.normal();
  }

  std::size_t dim() const override { return spec().dim; }

  double loss(const Eigen::VectorXd& x, const Batch&) const override {
    check_dim(x);
    const Eigen::VectorXd r = x - minimizer_;
    return 0.5 * r.dot(hessian_ * r);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x,
                           const Batch&) const override {
    check_dim(x);
    return hessian_ * (x - minimizer_);
  }

  const Eigen::MatrixXd& hessian() const noexcept { return hessian_; }
  const Eigen::VectorXd& minimizer() const noexcept { return minimizer_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }

 private:
  Eigen::MatrixXd hessian_;
  Eigen::VectorXd minimizer_;
  Eigen::VectorXd eigenvalues_;
};

namespace detail {

// Numerically stable softmax cross-entropy. Writes softmax(logits) - onehot
// into `residual` when non-null.
inline double cross_entropy(const Eigen::VectorXd& logits, std::size_t label,
                            Eigen::VectorXd* residual) {
  const double peak = logits.maxCoeff();
  const Eigen::VectorXd shifted = logits.array() - peak;
  const Eigen::VectorXd e = shifted.array().exp();
  const double z = e.sum();
  const auto y = static_cast<Eigen::Index>(label);
  if (residual) {
    *residual = e / z;
    (*residual)[y] -= 1.0;
  }
  return std::log(z) - shifted[y];
}

// Lowest index wins ties.
inline std::size_t argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<std::size_t>(best);
}

}  // namespace detail

// Shared storage for the labelled classifiers: samples as columns, train
// split first, test split after.
class ClassificationObjective : public Objective {
 public:
  using Objective::Objective;

  bool is_classifier() const override { return true; }
  std::size_t train_size() const override { return spec().train_samples; }
  std::size_t test_size() const override { return spec().test_samples; }

  const Eigen::MatrixXd& features() const noexcept { return features_; }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }

  double accuracy(const Eigen::VectorXd& x,
                  std::span<const std::size_t> indices) const override {
    check_dim(x);
    if (indices.empty()) return 0.0;
    const auto ctx = prepare(x);
    std::size_t correct = 0;
    for (std::size_t i : indices) {
      check_index(i);
      if (detail::argmax(logits(ctx, i)) == labels_[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(indices.size());
  }

  double loss(const Eigen::VectorXd& x, const Batch& batch) const override {
    check_dim(x);
    const auto ctx = prepare(x);
    double total = 0.0;
    std::size_t count = 0;
    for_each_index(batch, [&](std::size_t i) {
      total += detail::cross_entropy(logits(ctx, i), labels_[i], nullptr);
      ++count;
    });
    return total / static_cast<double>(count);
  }

 protected:
  // Per-evaluation quantities that depend on x only.
  struct Context {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
  };

  virtual Context prepare(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd logits(const Context& ctx, std::size_t i) const = 0;

  template <class Fn>
  void for_each_index(const Batch& batch, Fn&& fn) const {
    if (batch.indices.empty()) {
      for (std::size_t i = 0; i < train_size(); ++i) fn(i);
      return;
    }
    for (std::size_t i : batch.indices) {
      check_index(i);
      fn(i);
    }
  }

  void check_index(std::size_t i) const {
    if (i >= labels_.size()) {
      throw InvalidDimensions("objective: sample index out of range");
    }
  }

  Eigen::MatrixXd features_;  // feature_dim x (train + test)
  std::vector<std::size_t> labels_;
};

// Linear softmax classifier over seeded Gaussian class clusters. Parameters
// are the C x f weight matrix, column-major.
class SoftmaxRegressionObjective final : public ClassificationObjective {
 public:
  explicit SoftmaxRegressionObjective(const ObjectiveSpec& spec)
      : ClassificationObjective(spec) {
    if (spec.classes < 2 || spec.feature_dim < 1 || spec.train_samples < 1) {
      throw InvalidDimensions("softmax: need >= 2 classes and data");
    }
    const auto f = static_cast<Eigen::Index>(spec.feature_dim);
    const auto c = static_cast<Eigen::Index>(spec.classes);
    const std::size_t n = spec.train_samples + spec.test_samples;
    RngStream rng(derive_seed(spec.seed, seed_tag::kObjective, 1));
    Eigen::MatrixXd means(f, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < f; ++i)
        means(i, j) = spec.separation * rng.normal();
    features_.resize(f, static_cast<Eigen::Index>(n));
    labels_.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t y = s % spec.classes;
      labels_[s] = y;
      for (Eigen::Index i = 0; i < f; ++i) {
        features_(i, static_cast<Eigen::Index>(s)) =
            means(i, static_cast<Eigen::Index>(y)) + spec.noise * rng.normal();
      }
    }
  }

  std::size_t dim() const override {
    return spec().classes * spec().feature_dim;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x,
                           const Batch& batch) const override {
    check_dim(x);
    const auto ctx = prepare(x);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(ctx.weights.rows(),
                                                 ctx.weights.cols());
    Eigen::VectorXd residual;
    std::size_t count = 0;
    for_each_index(batch, [&](std::size_t i) {
      detail::cross_entropy(logits(ctx, i), labels_[i], &residual);
      grad.noalias() +=
          residual * features_.col(static_cast<Eigen::Index>(i)).transpose();
      ++count;
    });
    grad /= static_cast<double>(count);
    return Eigen::Map<const Eigen::VectorXd>(grad.data(), grad.size());
  }

 protected:
  Context prepare(const Eigen::VectorXd& x) const override {
    return {Eigen::Map<const Eigen::MatrixXd>(
                x.data(), static_cast<Eigen::Index>(spec().classes),
                static_cast<Eigen::Index>(spec().feature_dim)),
            {}};
  }

  Eigen::VectorXd logits(const Context& ctx, std::size_t i) const override {
    return ctx.weights * features_.col(static_cast<Eigen::Index>(i));
  }
};

// Frozen two-layer network standing in for a pretrained model with prompt
// input. The trainable input is a p x m prompt theta (flattened
// column-major) concatenated with each example x:
//   h = tanh(A theta + B x + b1),  logits = W2 h + b2.
// Labels come from the same network evaluated at a hidden teacher prompt
// theta0 + shift, so a prompt offset exists that fits the data.
class FrozenPromptSurrogate final : public ClassificationObjective {
 public:
  explicit FrozenPromptSurrogate(const ObjectiveSpec& spec)
      : ClassificationObjective(spec) {
    if (spec.classes < 2 || spec.feature_dim < 1 || spec.hidden < 1 ||
        spec.p < 1 || spec.m < 1 || spec.train_samples < 1) {
      throw InvalidDimensions("surrogate: degenerate dimensions");
    }
    const auto h = static_cast<Eigen::Index>(spec.hidden);
    const auto f = static_cast<Eigen::Index>(spec.feature_dim);
    const auto c = static_cast<Eigen::Index>(spec.classes);
    const auto d = static_cast<Eigen::Index>(spec.p * spec.m);
    RngStream rng(derive_seed(spec.seed, seed_tag::kObjective, 2));
    auto fill = [&](Eigen::MatrixXd& mat, Eigen::Index rows,
                    Eigen::Index cols, double sd) {
      mat.resize(rows, cols);
      for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) mat(i, j) = sd * rng.normal();
    };
    const double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(h));
    fill(prompt_weights_, h, d, inv_sqrt_h);
    fill(input_weights_, h, f, 1.0 / std::sqrt(static_cast<double>(f)));
    Eigen::MatrixXd b1;
    fill(b1, h, 1, 0.5);
    hidden_bias_ = b1.col(0);
    fill(head_weights_, c, h, spec.head_gain * inv_sqrt_h);
    head_bias_ = Eigen::VectorXd::Zero(c);

    Eigen::MatrixXd theta0;
    fill(theta0, static_cast<Eigen::Index>(spec.p),
         static_cast<Eigen::Index>(spec.m),
         1.0 / std::sqrt(static_cast<double>(spec.p)));
    theta0_ = theta0;
    Eigen::MatrixXd shift;
    fill(shift, static_cast<Eigen::Index>(spec.p),
         static_cast<Eigen::Index>(spec.m),
         spec.teacher_shift / std::sqrt(static_cast<double>(spec.p)));
    const Eigen::VectorXd teacher =
        Eigen::Map<const Eigen::VectorXd>(theta0.data(), d) +
        Eigen::Map<const Eigen::VectorXd>(shift.data(), d);

    const std::size_t n = spec.train_samples + spec.test_samples;
    fill(features_, f, static_cast<Eigen::Index>(n), spec.noise);
    labels_.resize(n);
    const Context ctx = prepare(teacher);
    for (std::size_t s = 0; s < n; ++s) {
      labels_[s] = detail::argmax(logits(ctx, s));
    }
  }

  std::size_t dim() const override { return spec().p * spec().m; }

  double loss(const Eigen::VectorXd& x, const Batch& batch) const override {
    const double ce = ClassificationObjective::loss(x, batch);
    if (spec().anchor == 0.0) return ce;
    return ce + 0.5 * spec().anchor * (x - initial_point()).squaredNorm();
  }

  Eigen::VectorXd initial_point() const override {
    return Eigen::Map<const Eigen::VectorXd>(theta0_.data(), theta0_.size());
  }

  // Frozen base prompt, p x m.
  const Eigen::MatrixXd& theta0() const noexcept { return theta0_; }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x,
                           const Batch& batch) const override {
    check_dim(x);
    const auto ctx = prepare(x);
    Eigen::VectorXd pre_grad = Eigen::VectorXd::Zero(hidden_bias_.size());
    Eigen::VectorXd residual;
    std::size_t count = 0;
    for_each_index(batch, [&](std::size_t i) {
      const Eigen::VectorXd act = hidden(ctx, i);
      detail::cross_entropy(head_weights_ * act + head_bias_, labels_[i],
                            &residual);
      pre_grad.array() += (head_weights_.transpose() * residual).array() *
                          (1.0 - act.array().square());
      ++count;
    });
    pre_grad /= static_cast<double>(count);
    Eigen::VectorXd grad = prompt_weights_.transpose() * pre_grad;
    if (spec().anchor != 0.0) grad += spec().anchor * (x - initial_point());
    return grad;
  }

 protected:
  Context prepare(const Eigen::VectorXd& x) const override {
    return {{}, prompt_weights_ * x + hidden_bias_};
  }

  Eigen::VectorXd logits(const Context& ctx, std::size_t i) const override {
    return head_weights_ * hidden(ctx, i) + head_bias_;
  }

 private:
  Eigen::VectorXd hidden(const Context& ctx, std::size_t i) const {
    return (ctx.bias +
            input_weights_ * features_.col(static_cast<Eigen::Index>(i)))
        .array()
        .tanh();
  }

  Eigen::MatrixXd prompt_weights_;  // hidden x (p m)
  Eigen::MatrixXd input_weights_;   // hidden x feature_dim
  Eigen::VectorXd hidden_bias_;
  Eigen::MatrixXd head_weights_;    // classes x hidden
  Eigen::VectorXd head_bias_;
  Eigen::MatrixXd theta0_;
};

inline std::unique_ptr<Objective> make_objective(const ObjectiveSpec& spec) {
  switch (spec.kind) {
    case ObjectiveKind::Quadratic:
      return std::make_unique<QuadraticObjective>(spec);
    case ObjectiveKind::SoftmaxRegression:
      return std::make_unique<SoftmaxRegressionObjective>(spec);
    case ObjectiveKind::FrozenPromptSurrogate:
      return std::make_unique<FrozenPromptSurrogate>(spec);
  }
  throw Unsupported("unknown objective kind");
}

// Human-readable spec plus derived constants.
inline std::string describe(const ObjectiveSpec& spec) {
  std::ostringstream os;
  os << "kind " << to_string(spec.kind) << '\n' << "seed " << spec.seed << '\n';
  switch (spec.kind) {
    case ObjectiveKind::Quadratic:
      os << "dim " << spec.dim << '\n'
         << "kappa " << spec.kappa << '\n'
         << "spectrum log-spaced [1, " << spec.kappa << "]\n";
      break;
    case ObjectiveKind::SoftmaxRegression:
      os << "classes " << spec.classes << '\n'
         << "feature_dim " << spec.feature_dim << '\n'
         << "dim " << spec.classes * spec.feature_dim << '\n'
         << "train_samples " << spec.train_samples << '\n'
         << "test_samples " << spec.test_samples << '\n'
         << "ln_classes " << std::log(static_cast<double>(spec.classes))
         << '\n';
      break;
    case ObjectiveKind::FrozenPromptSurrogate:
      os << "prompt " << spec.p << " x " << spec.m << '\n'
         << "dim " << spec.p * spec.m << '\n'
         << "hidden " << spec.hidden << '\n'
         << "classes " << spec.classes << '\n'
         << "feature_dim " << spec.feature_dim << '\n'
         << "train_samples " << spec.train_samples << '\n'
         << "test_samples " << spec.test_samples << '\n'
         << "ln_classes " << std::log(static_cast<double>(spec.classes))
         << '\n';
      break;
  }
  return os.str();
}

}  // namespace zipzo
