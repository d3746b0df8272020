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

#ifndef FEDLI_CLIENT_HPP_
#define FEDLI_CLIENT_HPP_

#include <variant>
#include <vector>

#include "fedli/core.hpp"
#include "fedli/objectives.hpp"
#include "fedli/rng.hpp"

namespace fedli {

// How the step-size grows back under reset handle 2: η·δ^(b/n) or η·δ·(b/n).
enum class ResetScaling { kExponent, kMultiplicative };

// Stochastic Armijo line search settings. `beta_back` is the backtracking
// multiplier; it is unrelated to the Lipschitz constant β.
struct ArmijoConfig {
  double c = 0.5;
  double beta_back = 0.5;
  double delta = 2.0;
  double eta_lmax = 1.0;
  int opt = 1;
  double min_step = 1e-10;
  int max_backtracks = 200;
  ResetScaling reset_scaling = ResetScaling::kExponent;

  void validate() const;
  bool operator==(const ArmijoConfig&) const = default;
};

struct PlainSgd {
  double eta_l = 0.01;
  bool operator==(const PlainSgd&) const = default;
};

struct ArmijoSgd {
  ArmijoConfig config;
  bool operator==(const ArmijoSgd&) const = default;
};

using LocalAlgorithm = std::variant<PlainSgd, ArmijoSgd>;

// Which sample the reported objective value f_{t,K}^i is taken on.
enum class ObjectiveEval { kFullShard, kLastBatch };

struct LocalConfig {
  LocalAlgorithm algorithm = PlainSgd{};
  std::size_t batch_size = 32;
  ObjectiveEval objective_eval = ObjectiveEval::kFullShard;
  // Record full-shard gradient norms at every local iterate.
  bool record_diagnostics = false;
};

struct LocalRunResult {
  ParamVector final_model;
  double last_step_size = 0.0;
  double objective_value = 0.0;
  int steps_taken = 0;
  int total_backtracks = 0;
  int floor_hits = 0;
  std::vector<double> accepted_step_sizes;
  // ‖∇f_i(w_{k−1})‖² per local step, only with record_diagnostics.
  std::vector<double> full_gradient_sq_norms;
  // f_i on the full shard before the first and after every step, only with
  // record_diagnostics.
  std::vector<double> full_objective_trace;
};

struct ArmijoResult {
  double step_size = 0.0;
  ParamVector next;
  int backtracks = 0;
  // The search gave up and took min_step.
  bool floor_hit = false;
};

template <typename DerivedW, typename DerivedG>
VectorX<typename DerivedW::Scalar> sgd_step(const Eigen::MatrixBase<DerivedW>& w,
                                            const Eigen::MatrixBase<DerivedG>& g,
                                            typename DerivedW::Scalar eta) {
  internal::require_same_dimension(w, g, "sgd_step");
  return w - eta * g;
}

// First η in eta_start, β·eta_start, β²·eta_start, … with
// f_B(w − ηg) ≤ f_B(w) − c·η·‖g‖², where f and g use the same batch B.
ArmijoResult armijo_search(const Objective& oracle, const ParamVector& w,
                           const Batch& batch, const ArmijoConfig& cfg,
                           double eta_start);

// Starting step for local step `step_index` (1-based).
double reset_step_size(double eta_prev, const ArmijoConfig& cfg, std::size_t batch_size,
                       std::size_t shard_size, int step_index);

// Hands out minibatches without replacement inside an epoch, reshuffling
// between epochs. A batch size at least the shard size means full batches.
class EpochBatchSampler {
 public:
  EpochBatchSampler(Index num_rows, std::size_t batch_size, RngStream rng);
  Batch next();

 private:
  Index num_rows_;
  std::size_t batch_size_;
  RngStream rng_;
  std::vector<Index> order_;
  std::size_t cursor_ = 0;
};

// K local steps from w0 (ClientUpdate). Pure in (oracle, w0, config, rng key).
LocalRunResult client_update(const Objective& oracle, const ParamVector& w0, int local_steps,
                             const LocalConfig& cfg, RngStream rng);

}  // namespace fedli

#endif  // FEDLI_CLIENT_HPP_
