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

#ifndef FEDLI_SERVER_HPP_
#define FEDLI_SERVER_HPP_

#include <optional>
#include <span>
#include <vector>

#include "fedli/client.hpp"
#include "fedli/core.hpp"
#include "fedli/objectives.hpp"

namespace fedli {

enum class FunctionSyncPolicy { kUniformMean, kShardWeightedMean };
enum class StepSizeSyncPolicy { kUnit, kMaxOfClients };

struct SyncPolicy {
  FunctionSyncPolicy function_sync = FunctionSyncPolicy::kUniformMean;
  StepSizeSyncPolicy step_size_sync = StepSizeSyncPolicy::kUnit;
  bool operator==(const SyncPolicy&) const = default;
};

// Two readings of the closed-form γ:
//   kPseudoObjective: γ = (f_g − η·Δᵀr) / (η‖Δ‖² + ε)
//   kLiteralDual:     γ = −η·Δᵀr + f_g / (η‖Δ‖² + ε)
enum class GammaFormula { kPseudoObjective, kLiteralDual };

struct DfwConfig {
  double proximal_eta = 1.0;
  double weight_decay_lambda = 1e-3;
  GammaFormula gamma_formula = GammaFormula::kPseudoObjective;
  double epsilon_denominator = 1e-12;

  void validate() const;
  bool operator==(const DfwConfig&) const = default;
};

struct FedAdamConfig {
  double eta_g = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double tau = 1e-3;

  void validate() const;
  bool operator==(const FedAdamConfig&) const = default;
};

// Global model plus whatever per-algorithm state the active server rule
// needs. Optional members are engaged only for the algorithm that uses them.
struct ServerState {
  ParamVector global_model;
  std::size_t round_index = 0;
  std::optional<ParamVector> adam_m;
  std::optional<ParamVector> adam_v;
  std::optional<ParamVector> server_control;
  std::vector<ParamVector> client_controls;
};

// Pseudo-objective f_t^g from the clients' reported values.
double function_sync(std::span<const ClientReturn> returns, const SyncPolicy& policy);

// Server step-size η_t^g: 1, or the largest client step-size.
double step_size_sync(std::span<const ClientReturn> returns, const SyncPolicy& policy);

// w_t − η_g·Δ. With η_g = 1 and Δ the mean model difference this is the
// FedAvg average.
template <typename DerivedW, typename DerivedD>
VectorX<typename DerivedW::Scalar> server_update_gd(const Eigen::MatrixBase<DerivedW>& w_t,
                                                    const Eigen::MatrixBase<DerivedD>& delta,
                                                    typename DerivedW::Scalar eta_g) {
  internal::require_same_dimension(w_t, delta, "server_update_gd");
  return w_t - eta_g * delta;
}

// γ_t clipped to [0, 1]; zero when Δ vanishes.
double dfw_step_size(const ParamVector& w_t, const ParamVector& delta, double f_g,
                     const DfwConfig& cfg);

// w_t − η(λw_t + γΔ).
ParamVector apply_dfw_step(const ParamVector& w_t, const ParamVector& delta, double gamma,
                           const DfwConfig& cfg);

struct DfwStep {
  ParamVector next;
  double gamma = 0.0;
};

DfwStep server_update_dfw(const ParamVector& w_t, const ParamVector& delta, double f_g,
                          const DfwConfig& cfg);

// One Adam step on the pseudo-gradient (no bias correction). Moments start
// at zero when the state has none yet.
ServerState server_update_fedadam(const ServerState& state, const ParamVector& delta,
                                  const FedAdamConfig& cfg);

struct FedExpStep {
  ParamVector next;
  double eta_g = 1.0;
};

// η_g = max(1, Σ‖Δ_i‖² / (2S(‖Δ̄‖² + ε))), w_{t+1} = w_t − η_g·Δ̄. When both
// ‖Δ̄‖ and ε are zero there is nothing to extrapolate and η_g = 1.
FedExpStep server_update_fedexp(const ParamVector& w_t,
                                std::span<const ParamVector> per_client_deltas,
                                double epsilon);

// f_i(w) + (mu/2)‖w − w_t‖² on a batch, with gradient.
ValueAndGradient fedprox_client_objective(const Objective& oracle, const ParamVector& w,
                                          const ParamVector& w_t, double mu_prox,
                                          const Batch& batch);

struct ScaffoldConfig {
  double eta_l = 0.01;
  double eta_g = 1.0;
  std::size_t batch_size = 32;
};

struct ScaffoldRound {
  ServerState state;
  std::vector<ClientReturn> returns;
  ParamVector aggregate_delta;
};

// One SCAFFOLD round with option-II control variates. `oracles` is indexed
// by client id and covers all N clients; batch streams are keyed by
// (seed, state.round_index, client id).
ScaffoldRound scaffold_round(const ServerState& state, std::span<const ClientId> sampled,
                             std::span<const ObjectivePtr> oracles, int local_steps,
                             const ScaffoldConfig& cfg, std::uint64_t seed);

}  // namespace fedli

#endif  // FEDLI_SERVER_HPP_
