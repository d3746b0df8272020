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

#include "fedli/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace fedli {
namespace {

void require_dimension(const Objective& oracle, const ParamVector& w) {
  if (w.size() != oracle.dimension()) {
    throw ConfigError("objective expects dimension " +
                      std::to_string(oracle.dimension()) + ", got " +
                      std::to_string(w.size()));
  }
}

void require_batch(const Objective& oracle, const Batch& batch) {
  if (batch.rows.empty()) throw InputError("empty batch");
  for (Index r : batch.rows) {
    if (r < 0 || r >= oracle.num_rows()) {
      throw InputError("batch row " + std::to_string(r) + " outside shard of " +
                       std::to_string(oracle.num_rows()) + " rows");
    }
  }
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double largest_eigenvalue(const Eigen::MatrixXd& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, std::span<const Index> rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

Eigen::VectorXi gather_labels(const Eigen::VectorXi& labels, std::span<const Index> rows) {
  Eigen::VectorXi out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Index>(r)) = labels(rows[r]);
  return out;
}

double max_row_norm(const Eigen::MatrixXd& x) {
  return x.rows() == 0 ? 0.0 : x.rowwise().norm().maxCoeff();
}

void require_labels(const DatasetShard& shard, int min_classes, const char* what) {
  if (shard.rows() < 1) throw InputError(std::string(what) + ": shard has no rows");
  if (shard.num_classes < min_classes) {
    throw InputError(std::string(what) + ": needs at least " +
                     std::to_string(min_classes) + " classes");
  }
  if (shard.labels.minCoeff() < 0 || shard.labels.maxCoeff() >= shard.num_classes) {
    throw InputError(std::string(what) + ": label outside declared class count");
  }
}

// Row-wise log-sum-exp cross-entropy; fills `probs` with the softmax.
double cross_entropy(const Eigen::MatrixXd& scores, const Eigen::VectorXi& labels,
                     Eigen::MatrixXd& probs) {
  probs.resize(scores.rows(), scores.cols());
  double total = 0.0;
  for (Index r = 0; r < scores.rows(); ++r) {
    const double m = scores.row(r).maxCoeff();
    const Eigen::RowVectorXd e = (scores.row(r).array() - m).exp().matrix();
    const double z = e.sum();
    probs.row(r) = e / z;
    total += m + std::log(z) - scores(r, labels(r));
  }
  return total / static_cast<double>(scores.rows());
}

template <typename Scorer>
double argmax_accuracy(const Dataset& data, Scorer&& scores_of) {
  if (data.rows() == 0) return 0.0;
  const Eigen::MatrixXd scores = scores_of(data.features);
  Index correct = 0;
  for (Index r = 0; r < scores.rows(); ++r) {
    Index best = 0;
    scores.row(r).maxCoeff(&best);
    if (best == data.labels(r)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.rows());
}

}  // namespace

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kQuadratic: return "quadratic";
    case ObjectiveKind::kLogisticRegression: return "logistic-regression";
    case ObjectiveKind::kLinearHinge: return "linear-hinge";
    case ObjectiveKind::kSoftmaxRegression: return "softmax-regression";
    case ObjectiveKind::kTinyMlp: return "tiny-mlp";
    case ObjectiveKind::kScalarCubic: return "scalar-cubic";
  }
  return "unknown";
}

Batch Batch::full(Index num_rows) {
  Batch b;
  b.rows.resize(static_cast<std::size_t>(num_rows));
  for (Index r = 0; r < num_rows; ++r) b.rows[static_cast<std::size_t>(r)] = r;
  return b;
}

double Objective::value(const ParamVector& w, std::span<const Index> rows) const {
  return value_and_gradient(w, rows).value;
}

double evaluate(const Objective& oracle, const ParamVector& w, const Batch& batch) {
  require_dimension(oracle, w);
  require_batch(oracle, batch);
  return oracle.value(w, batch.rows);
}

ParamVector stochastic_gradient(const Objective& oracle, const ParamVector& w,
                                const Batch& batch) {
  return evaluate_with_gradient(oracle, w, batch).gradient;
}

ValueAndGradient evaluate_with_gradient(const Objective& oracle,
                                        const ParamVector& w, const Batch& batch) {
  require_dimension(oracle, w);
  require_batch(oracle, batch);
  return oracle.value_and_gradient(w, batch.rows);
}

Batch sample_minibatch(Index num_rows, std::size_t size, RngStream& rng) {
  if (size == 0) throw InputError("batch size must be positive");
  if (static_cast<Index>(size) >= num_rows) return Batch::full(num_rows);
  // Partial Fisher-Yates: only the first `size` slots are needed.
  std::vector<Index> pool(static_cast<std::size_t>(num_rows));
  for (Index r = 0; r < num_rows; ++r) pool[static_cast<std::size_t>(r)] = r;
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  Batch b;
  b.rows.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size));
  std::sort(b.rows.begin(), b.rows.end());
  return b;
}

int hinge_argmax(const Eigen::Ref<const Eigen::VectorXd>& scores, int true_label) {
  if (scores.size() < 2) throw InputError("hinge loss needs at least 2 classes");
  if (true_label < 0 || true_label >= scores.size()) {
    throw InputError("hinge loss: label out of range");
  }
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (Index k = 0; k < scores.size(); ++k) {
    const double v = scores(k) + (k == true_label ? 0.0 : 1.0) - scores(true_label);
    if (v > best_value) {
      best_value = v;
      best = static_cast<int>(k);
    }
  }
  return best;
}

double hinge_loss(const Eigen::Ref<const Eigen::VectorXd>& scores, int true_label) {
  const int k = hinge_argmax(scores, true_label);
  const double v = scores(k) + (k == true_label ? 0.0 : 1.0) - scores(true_label);
  return std::max(v, 0.0);
}

Eigen::VectorXd softmax_dual_direction(const Eigen::Ref<const Eigen::VectorXd>& scores) {
  if (scores.size() == 0) throw InputError("softmax of an empty score vector");
  if (!scores.allFinite()) throw InputError("softmax: non-finite score");
  const Eigen::VectorXd e = (scores.array() - scores.maxCoeff()).exp().matrix();
  return e / e.sum();
}

GradientCheck finite_difference_check(const Objective& oracle,
                                      const ParamVector& w, const Batch& batch,
                                      double epsilon) {
  if (!(epsilon > 0)) throw ConfigError("finite difference epsilon must be positive");
  require_dimension(oracle, w);
  require_batch(oracle, batch);
  GradientCheck out;
  if (oracle.near_nonsmooth_point(w, batch.rows, epsilon)) {
    out.skipped = true;
    out.note = "non-smooth point, check skipped";
    return out;
  }
  const ParamVector g = oracle.value_and_gradient(w, batch.rows).gradient;
  ParamVector probe = w;
  for (Index j = 0; j < w.size(); ++j) {
    probe(j) = w(j) + epsilon;
    const double up = oracle.value(probe, batch.rows);
    probe(j) = w(j) - epsilon;
    const double down = oracle.value(probe, batch.rows);
    probe(j) = w(j);
    const double fd = (up - down) / (2.0 * epsilon);
    const double scale = std::max({1.0, std::abs(fd), std::abs(g(j))});
    out.max_relative_error = std::max(out.max_relative_error, std::abs(fd - g(j)) / scale);
  }
  return out;
}

double estimate_variance_bound(const Objective& oracle, const ParamVector& w,
                               std::size_t batch_size, RngStream& rng,
                               int samples, double safety) {
  require_dimension(oracle, w);
  if (static_cast<Index>(batch_size) >= oracle.num_rows()) return 0.0;
  const Batch full = Batch::full(oracle.num_rows());
  const ParamVector g = oracle.value_and_gradient(w, full.rows).gradient;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Batch b = sample_minibatch(oracle.num_rows(), batch_size, rng);
    worst = std::max(worst, (oracle.value_and_gradient(w, b.rows).gradient - g).squaredNorm());
  }
  return worst * safety;
}

// ---------------------------------------------------------------- quadratic

QuadraticObjective::QuadraticObjective(std::vector<QuadraticTerm> terms)
    : terms_(std::move(terms)) {
  if (terms_.empty()) throw InputError("quadratic objective needs at least one term");
  dim_ = terms_.front().b.size();
  hessian_ = Eigen::MatrixXd::Zero(dim_, dim_);
  linear_ = Eigen::VectorXd::Zero(dim_);
  for (QuadraticTerm& t : terms_) {
    if (t.A.rows() != dim_ || t.A.cols() != dim_ || t.b.size() != dim_) {
      throw ConfigError("quadratic term dimensions disagree");
    }
    t.A = 0.5 * (t.A + t.A.transpose());
    hessian_ += t.A;
    linear_ += t.A * t.b;
  }
  const double m = static_cast<double>(terms_.size());
  hessian_ /= m;
  linear_ /= m;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hessian_, Eigen::EigenvaluesOnly);
  constants_.smoothness_L = solver.eigenvalues().maxCoeff();
  constants_.strong_convexity_mu = std::max(0.0, solver.eigenvalues().minCoeff());
  if (constants_.strong_convexity_mu <= 0) {
    throw ConfigError("quadratic objective must have a positive definite Hessian");
  }
  optimum_.point = hessian_.ldlt().solve(linear_);
  optimum_.value = value(optimum_.point, Batch::full(num_rows()).rows);
}

ValueAndGradient QuadraticObjective::value_and_gradient(const ParamVector& w,
                                                        std::span<const Index> rows) const {
  ValueAndGradient out{0.0, ParamVector::Zero(dim_)};
  for (Index r : rows) {
    const QuadraticTerm& t = terms_[static_cast<std::size_t>(r)];
    const Eigen::VectorXd d = w - t.b;
    const Eigen::VectorXd ad = t.A * d;
    out.value += 0.5 * d.dot(ad);
    out.gradient += ad;
  }
  const double b = static_cast<double>(rows.size());
  out.value /= b;
  out.gradient /= b;
  return out;
}

// ---------------------------------------------------------------- logistic

LogisticObjective::LogisticObjective(DatasetShard shard, double l2)
    : shard_(std::move(shard)), l2_(l2) {
  require_labels(shard_, 2, "logistic regression");
  if (shard_.labels.maxCoeff() > 1) throw InputError("logistic regression: labels must be 0/1");
  if (l2_ < 0) throw ConfigError("l2 must be nonnegative");
  const double m = static_cast<double>(shard_.rows());
  const Eigen::MatrixXd gram = shard_.features.transpose() * shard_.features / m;
  constants_.smoothness_L = 0.25 * largest_eigenvalue(gram) + l2_;
  constants_.strong_convexity_mu = l2_;
  constants_.lipschitz_beta = l2_ == 0.0 ? max_row_norm(shard_.features) : 0.0;
}

ValueAndGradient LogisticObjective::value_and_gradient(const ParamVector& w,
                                                       std::span<const Index> rows) const {
  ValueAndGradient out{0.0, ParamVector::Zero(w.size())};
  for (Index r : rows) {
    const double sign = shard_.labels(r) == 1 ? 1.0 : -1.0;
    const double z = sign * shard_.features.row(r).dot(w);
    out.value += softplus(-z);
    out.gradient.noalias() -= (sign * sigmoid(-z)) * shard_.features.row(r).transpose();
  }
  const double b = static_cast<double>(rows.size());
  out.value = out.value / b + 0.5 * l2_ * w.squaredNorm();
  out.gradient = out.gradient / b + l2_ * w;
  return out;
}

std::optional<double> LogisticObjective::accuracy(const ParamVector& w,
                                                  const Dataset& data) const {
  if (data.rows() == 0) return 0.0;
  const Eigen::VectorXd s = data.features * w;
  Index correct = 0;
  for (Index r = 0; r < s.size(); ++r) {
    if ((s(r) > 0 ? 1 : 0) == data.labels(r)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.rows());
}

// ---------------------------------------------------------------- hinge

LinearHingeObjective::LinearHingeObjective(DatasetShard shard, double l2)
    : shard_(std::move(shard)), l2_(l2) {
  require_labels(shard_, 2, "linear hinge");
  if (l2_ < 0) throw ConfigError("l2 must be nonnegative");
  constants_.strong_convexity_mu = l2_;
  constants_.lipschitz_beta = l2_ == 0.0 ? std::sqrt(2.0) * max_row_norm(shard_.features) : 0.0;
}

ValueAndGradient LinearHingeObjective::value_and_gradient(const ParamVector& w,
                                                          std::span<const Index> rows) const {
  const Index d = shard_.features.cols();
  const Index c = shard_.num_classes;
  const Eigen::Map<const Eigen::MatrixXd> W(w.data(), d, c);
  ValueAndGradient out{0.0, ParamVector::Zero(w.size())};
  Eigen::Map<Eigen::MatrixXd> G(out.gradient.data(), d, c);
  for (Index r : rows) {
    const Eigen::VectorXd scores = W.transpose() * shard_.features.row(r).transpose();
    const int y = shard_.labels(r);
    const int k = hinge_argmax(scores, y);
    out.value += std::max(0.0, scores(k) + (k == y ? 0.0 : 1.0) - scores(y));
    if (k != y) {
      G.col(k) += shard_.features.row(r).transpose();
      G.col(y) -= shard_.features.row(r).transpose();
    }
  }
  const double b = static_cast<double>(rows.size());
  out.value = out.value / b + 0.5 * l2_ * w.squaredNorm();
  out.gradient = out.gradient / b + l2_ * w;
  return out;
}

bool LinearHingeObjective::near_nonsmooth_point(const ParamVector& w,
                                                std::span<const Index> rows,
                                                double radius) const {
  const Index d = shard_.features.cols();
  const Eigen::Map<const Eigen::MatrixXd> W(w.data(), d, shard_.num_classes);
  for (Index r : rows) {
    const Eigen::VectorXd scores = W.transpose() * shard_.features.row(r).transpose();
    const int y = shard_.labels(r);
    Eigen::VectorXd augmented = scores.array() + 1.0 - scores(y);
    augmented(y) = 0.0;
    double first = -std::numeric_limits<double>::infinity();
    double second = first;
    for (Index k = 0; k < augmented.size(); ++k) {
      if (augmented(k) > first) {
        second = first;
        first = augmented(k);
      } else if (augmented(k) > second) {
        second = augmented(k);
      }
    }
    // A perturbation of size `radius` in any one coordinate moves each
    // augmented score by at most radius·‖x‖₁.
    if (first - second <= 2.0 * radius * shard_.features.row(r).lpNorm<1>()) return true;
  }
  return false;
}

std::optional<double> LinearHingeObjective::accuracy(const ParamVector& w,
                                                     const Dataset& data) const {
  const Eigen::Map<const Eigen::MatrixXd> W(w.data(), shard_.features.cols(), shard_.num_classes);
  return argmax_accuracy(data, [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return x * W; });
}

// ---------------------------------------------------------------- softmax

SoftmaxObjective::SoftmaxObjective(DatasetShard shard, double l2)
    : shard_(std::move(shard)), l2_(l2) {
  require_labels(shard_, 2, "softmax regression");
  if (l2_ < 0) throw ConfigError("l2 must be nonnegative");
  const double m = static_cast<double>(shard_.rows());
  const Eigen::MatrixXd gram = shard_.features.transpose() * shard_.features / m;
  // The cross-entropy Hessian in score space, diag(p) − ppᵀ, has norm ≤ ½.
  constants_.smoothness_L = 0.5 * largest_eigenvalue(gram) + l2_;
  constants_.strong_convexity_mu = l2_;
  constants_.lipschitz_beta = l2_ == 0.0 ? std::sqrt(2.0) * max_row_norm(shard_.features) : 0.0;
}

ValueAndGradient SoftmaxObjective::value_and_gradient(const ParamVector& w,
                                                      std::span<const Index> rows) const {
  const Index d = shard_.features.cols();
  const Index c = shard_.num_classes;
  const Eigen::Map<const Eigen::MatrixXd> W(w.data(), d, c);
  const Eigen::MatrixXd x = gather_rows(shard_.features, rows);
  const Eigen::VectorXi y = gather_labels(shard_.labels, rows);
  Eigen::MatrixXd probs;
  ValueAndGradient out;
  out.value = cross_entropy(x * W, y, probs);
  for (Index r = 0; r < y.size(); ++r) probs(r, y(r)) -= 1.0;
  const double b = static_cast<double>(rows.size());
  const Eigen::MatrixXd G = x.transpose() * probs / b;
  out.gradient = Eigen::Map<const ParamVector>(G.data(), G.size()) + l2_ * w;
  out.value += 0.5 * l2_ * w.squaredNorm();
  return out;
}

std::optional<double> SoftmaxObjective::accuracy(const ParamVector& w,
                                                 const Dataset& data) const {
  const Eigen::Map<const Eigen::MatrixXd> W(w.data(), shard_.features.cols(), shard_.num_classes);
  return argmax_accuracy(data, [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return x * W; });
}

// ---------------------------------------------------------------- tiny MLP

TinyMlpObjective::TinyMlpObjective(DatasetShard shard, Index hidden, double l2)
    : shard_(std::move(shard)), hidden_(hidden), l2_(l2) {
  require_labels(shard_, 2, "tiny mlp");
  if (hidden_ < 1) throw ConfigError("tiny mlp needs at least one hidden unit");
  if (l2_ < 0) throw ConfigError("l2 must be nonnegative");
}

Index TinyMlpObjective::parameter_count(Index inputs, Index hidden, Index classes) {
  return hidden * inputs + hidden + classes * hidden + classes;
}

Index TinyMlpObjective::dimension() const {
  return parameter_count(shard_.features.cols(), hidden_, shard_.num_classes);
}

Eigen::MatrixXd TinyMlpObjective::forward_scores(const ParamVector& w,
                                                 const Eigen::MatrixXd& x) const {
  const Index d = shard_.features.cols();
  const Index h = hidden_;
  const Index c = shard_.num_classes;
  const double* p = w.data();
  const Eigen::Map<const Eigen::MatrixXd> W1(p, h, d);
  const Eigen::Map<const Eigen::VectorXd> b1(p + h * d, h);
  const Eigen::Map<const Eigen::MatrixXd> W2(p + h * d + h, c, h);
  const Eigen::Map<const Eigen::VectorXd> b2(p + h * d + h + c * h, c);
  const Eigen::MatrixXd a = ((x * W1.transpose()).rowwise() + b1.transpose()).array().tanh().matrix();
  return (a * W2.transpose()).rowwise() + b2.transpose();
}

ValueAndGradient TinyMlpObjective::value_and_gradient(const ParamVector& w,
                                                      std::span<const Index> rows) const {
  const Index d = shard_.features.cols();
  const Index h = hidden_;
  const Index c = shard_.num_classes;
  const double* p = w.data();
  const Eigen::Map<const Eigen::MatrixXd> W1(p, h, d);
  const Eigen::Map<const Eigen::VectorXd> b1(p + h * d, h);
  const Eigen::Map<const Eigen::MatrixXd> W2(p + h * d + h, c, h);
  const Eigen::Map<const Eigen::VectorXd> b2(p + h * d + h + c * h, c);

  const Eigen::MatrixXd x = gather_rows(shard_.features, rows);
  const Eigen::VectorXi y = gather_labels(shard_.labels, rows);
  const Eigen::MatrixXd a = ((x * W1.transpose()).rowwise() + b1.transpose()).array().tanh().matrix();
  const Eigen::MatrixXd scores = (a * W2.transpose()).rowwise() + b2.transpose();

  Eigen::MatrixXd dscores;
  ValueAndGradient out;
  out.value = cross_entropy(scores, y, dscores);
  for (Index r = 0; r < y.size(); ++r) dscores(r, y(r)) -= 1.0;
  dscores /= static_cast<double>(rows.size());

  out.gradient.resize(w.size());
  double* g = out.gradient.data();
  Eigen::Map<Eigen::MatrixXd> dW1(g, h, d);
  Eigen::Map<Eigen::VectorXd> db1(g + h * d, h);
  Eigen::Map<Eigen::MatrixXd> dW2(g + h * d + h, c, h);
  Eigen::Map<Eigen::VectorXd> db2(g + h * d + h + c * h, c);

  dW2 = dscores.transpose() * a;
  db2 = dscores.colwise().sum().transpose();
  const Eigen::MatrixXd dz = ((dscores * W2).array() * (1.0 - a.array().square())).matrix();
  dW1 = dz.transpose() * x;
  db1 = dz.colwise().sum().transpose();

  out.value += 0.5 * l2_ * w.squaredNorm();
  out.gradient += l2_ * w;
  return out;
}

std::optional<double> TinyMlpObjective::accuracy(const ParamVector& w,
                                                 const Dataset& data) const {
  return argmax_accuracy(data, [&](const Eigen::MatrixXd& x) { return forward_scores(w, x); });
}

// ---------------------------------------------------------------- scalar cubic

ValueAndGradient ScalarCubicObjective::value_and_gradient(const ParamVector& w,
                                                          std::span<const Index> /*rows*/) const {
  const double x = w(0);
  ValueAndGradient out;
  out.value = cubic_ * x * x * x + quadratic_ * x * x;
  out.gradient = ParamVector::Constant(1, 3.0 * cubic_ * x * x + 2.0 * quadratic_ * x);
  return out;
}

std::vector<ObjectivePtr> scalar_cubic_pair() {
  return {std::make_shared<ScalarCubicObjective>(3.0, -1.0),
          std::make_shared<ScalarCubicObjective>(-1.0, 1.0)};
}

// ---------------------------------------------------------------- proximal

ProximalObjective::ProximalObjective(const Objective& base, ParamVector anchor, double mu)
    : base_(base), anchor_(std::move(anchor)), mu_(mu) {
  if (mu_ < 0) throw ConfigError("proximal mu must be nonnegative");
  if (anchor_.size() != base_.dimension()) {
    throw ConfigError("proximal anchor dimension mismatch");
  }
}

ValueAndGradient ProximalObjective::value_and_gradient(const ParamVector& w,
                                                       std::span<const Index> rows) const {
  ValueAndGradient out = base_.value_and_gradient(w, rows);
  const ParamVector diff = w - anchor_;
  out.value += 0.5 * mu_ * diff.squaredNorm();
  out.gradient += mu_ * diff;
  return out;
}

}  // namespace fedli
