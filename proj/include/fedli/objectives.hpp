/*
 * Copyright 2026 The fedli Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDLI_OBJECTIVES_HPP_
#define FEDLI_OBJECTIVES_HPP_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedli/core.hpp"
#include "fedli/dataset.hpp"
#include "fedli/rng.hpp"

namespace fedli {

enum class ObjectiveKind {
  kQuadratic,
  kLogisticRegression,
  kLinearHinge,
  kSoftmaxRegression,
  kTinyMlp,
  kScalarCubic,
};

std::string to_string(ObjectiveKind kind);

// Row indices into a client's shard. Minibatches hold distinct rows drawn
// uniformly without replacement.
struct Batch {
  std::vector<Index> rows;

  static Batch full(Index num_rows);
  std::size_t size() const { return rows.size(); }
};

struct Optimum {
  ParamVector point;
  double value = 0.0;
};

struct ValueAndGradient {
  double value = 0.0;
  ParamVector gradient;
};

// A per-client objective f_i: the mean of a per-row loss over a shard.
// Implementations are immutable after construction and safe to share
// across threads.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual ObjectiveKind kind() const = 0;
  virtual Index dimension() const = 0;
  virtual Index num_rows() const = 0;

  // Mean loss over `rows` and its gradient. `rows` has been validated.
  virtual ValueAndGradient value_and_gradient(const ParamVector& w,
                                              std::span<const Index> rows) const = 0;
  virtual double value(const ParamVector& w, std::span<const Index> rows) const;

  virtual TheoreticalConstants constants() const { return {}; }
  virtual std::optional<Optimum> optimum() const { return std::nullopt; }

  // True when the batch loss has a kink within `radius` (in parameter
  // max-norm) of w, so finite differences are meaningless there.
  virtual bool near_nonsmooth_point(const ParamVector& /*w*/,
                                    std::span<const Index> /*rows*/,
                                    double /*radius*/) const {
    return false;
  }

  // Classification accuracy on held-out data, for models that predict labels.
  virtual std::optional<double> accuracy(const ParamVector& /*w*/,
                                         const Dataset& /*data*/) const {
    return std::nullopt;
  }
};

using ObjectivePtr = std::shared_ptr<const Objective>;

double evaluate(const Objective& oracle, const ParamVector& w, const Batch& batch);
ParamVector stochastic_gradient(const Objective& oracle, const ParamVector& w,
                                const Batch& batch);
ValueAndGradient evaluate_with_gradient(const Objective& oracle,
                                        const ParamVector& w, const Batch& batch);

// Uniform batch of `size` distinct rows out of `num_rows`.
Batch sample_minibatch(Index num_rows, std::size_t size, RngStream& rng);

// max over ŷ of scores[ŷ] + [ŷ ≠ y] − scores[y].
double hinge_loss(const Eigen::Ref<const Eigen::VectorXd>& scores, int true_label);

// Index achieving the hinge maximum; ties go to the smallest class index.
int hinge_argmax(const Eigen::Ref<const Eigen::VectorXd>& scores, int true_label);

// Softmax of the score vector, stabilized by max-subtraction. The result
// is a point on the probability simplex.
Eigen::VectorXd softmax_dual_direction(const Eigen::Ref<const Eigen::VectorXd>& scores);

struct GradientCheck {
  double max_relative_error = 0.0;
  bool skipped = false;
  std::string note;
};

// Central differences against the analytic gradient on one fixed batch.
// Per-coordinate error is |fd − g| / max(1, |fd|, |g|).
GradientCheck finite_difference_check(const Objective& oracle,
                                      const ParamVector& w, const Batch& batch,
                                      double epsilon);

// Empirical stand-in for the variance bound G: the largest squared deviation
// of a sampled batch gradient from the full gradient, times `safety`.
double estimate_variance_bound(const Objective& oracle, const ParamVector& w,
                               std::size_t batch_size, RngStream& rng,
                               int samples = 1000, double safety = 1.5);

// ½(w − b)ᵀA(w − b), one term per row.
struct QuadraticTerm {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

class QuadraticObjective final : public Objective {
 public:
  explicit QuadraticObjective(std::vector<QuadraticTerm> terms);

  ObjectiveKind kind() const override { return ObjectiveKind::kQuadratic; }
  Index dimension() const override { return dim_; }
  Index num_rows() const override { return static_cast<Index>(terms_.size()); }
  ValueAndGradient value_and_gradient(const ParamVector& w,
                                      std::span<const Index> rows) const override;
  TheoreticalConstants constants() const override { return constants_; }
  std::optional<Optimum> optimum() const override { return optimum_; }

  // Hessian of the full-shard objective.
  const Eigen::MatrixXd& hessian() const { return hessian_; }
  // Σ_j A_j b_j / m, so ∇f(w) = H w − this.
  const Eigen::VectorXd& linear_term() const { return linear_; }

 private:
  std::vector<QuadraticTerm> terms_;
  Index dim_ = 0;
  Eigen::MatrixXd hessian_;
  Eigen::VectorXd linear_;
  TheoreticalConstants constants_;
  Optimum optimum_;
};

// Binary logistic loss log(1 + exp(−ỹ xᵀw)), ỹ ∈ {−1, +1}, plus (l2/2)‖w‖².
class LogisticObjective final : public Objective {
 public:
  LogisticObjective(DatasetShard shard, double l2 = 0.0);

  ObjectiveKind kind() const override { return ObjectiveKind::kLogisticRegression; }
  Index dimension() const override { return shard_.features.cols(); }
  Index num_rows() const override { return shard_.rows(); }
  ValueAndGradient value_and_gradient(const ParamVector& w,
                                      std::span<const Index> rows) const override;
  TheoreticalConstants constants() const override { return constants_; }
  std::optional<double> accuracy(const ParamVector& w, const Dataset& data) const override;

 private:
  DatasetShard shard_;
  double l2_;
  TheoreticalConstants constants_;
};

// Linear multi-class scorer, W stored column-per-class: w = vec(W), W is
// features × classes.
class LinearHingeObjective final : public Objective {
 public:
  LinearHingeObjective(DatasetShard shard, double l2 = 0.0);

  ObjectiveKind kind() const override { return ObjectiveKind::kLinearHinge; }
  Index dimension() const override { return shard_.features.cols() * shard_.num_classes; }
  Index num_rows() const override { return shard_.rows(); }
  ValueAndGradient value_and_gradient(const ParamVector& w,
                                      std::span<const Index> rows) const override;
  TheoreticalConstants constants() const override { return constants_; }
  bool near_nonsmooth_point(const ParamVector& w, std::span<const Index> rows,
                            double radius) const override;
  std::optional<double> accuracy(const ParamVector& w, const Dataset& data) const override;

 private:
  DatasetShard shard_;
  double l2_;
  TheoreticalConstants constants_;
};

// Multinomial cross-entropy on a linear scorer (same layout as the hinge
// model).
class SoftmaxObjective final : public Objective {
 public:
  SoftmaxObjective(DatasetShard shard, double l2 = 0.0);

  ObjectiveKind kind() const override { return ObjectiveKind::kSoftmaxRegression; }
  Index dimension() const override { return shard_.features.cols() * shard_.num_classes; }
  Index num_rows() const override { return shard_.rows(); }
  ValueAndGradient value_and_gradient(const ParamVector& w,
                                      std::span<const Index> rows) const override;
  TheoreticalConstants constants() const override { return constants_; }
  std::optional<double> accuracy(const ParamVector& w, const Dataset& data) const override;

 private:
  DatasetShard shard_;
  double l2_;
  TheoreticalConstants constants_;
};

// One tanh hidden layer followed by a softmax cross-entropy head.
// Layout: [W1 (hidden × in, column-major), b1, W2 (classes × hidden), b2].
class TinyMlpObjective final : public Objective {
 public:
  static constexpr Index kDefaultHidden = 16;

  TinyMlpObjective(DatasetShard shard, Index hidden = kDefaultHidden, double l2 = 0.0);

  ObjectiveKind kind() const override { return ObjectiveKind::kTinyMlp; }
  Index dimension() const override;
  Index num_rows() const override { return shard_.rows(); }
  ValueAndGradient value_and_gradient(const ParamVector& w,
                                      std::span<const Index> rows) const override;
  std::optional<double> accuracy(const ParamVector& w, const Dataset& data) const override;

  static Index parameter_count(Index inputs, Index hidden, Index classes);

 private:
  Eigen::MatrixXd forward_scores(const ParamVector& w, const Eigen::MatrixXd& x) const;

  DatasetShard shard_;
  Index hidden_;
  double l2_;
};

// f(x) = cubic·x³ + quadratic·x² on a scalar parameter.
class ScalarCubicObjective final : public Objective {
 public:
  ScalarCubicObjective(double cubic, double quadratic)
      : cubic_(cubic), quadratic_(quadratic) {}

  ObjectiveKind kind() const override { return ObjectiveKind::kScalarCubic; }
  Index dimension() const override { return 1; }
  Index num_rows() const override { return 1; }
  ValueAndGradient value_and_gradient(const ParamVector& w,
                                      std::span<const Index> rows) const override;

 private:
  double cubic_;
  double quadratic_;
};

// The two-client pair {3x³ − x², x² − x³} whose mean is x³.
std::vector<ObjectivePtr> scalar_cubic_pair();

// Decorator adding (mu/2)‖w − anchor‖² to every batch loss.
class ProximalObjective final : public Objective {
 public:
  ProximalObjective(const Objective& base, ParamVector anchor, double mu);

  ObjectiveKind kind() const override { return base_.kind(); }
  Index dimension() const override { return base_.dimension(); }
  Index num_rows() const override { return base_.num_rows(); }
  ValueAndGradient value_and_gradient(const ParamVector& w,
                                      std::span<const Index> rows) const override;
  bool near_nonsmooth_point(const ParamVector& w, std::span<const Index> rows,
                            double radius) const override {
    return base_.near_nonsmooth_point(w, rows, radius);
  }

 private:
  const Objective& base_;
  ParamVector anchor_;
  double mu_;
};

}  // namespace fedli

#endif  // FEDLI_OBJECTIVES_HPP_
