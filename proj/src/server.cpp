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

#include "fedli/server.hpp"

#include <algorithm>
#include <cmath>

namespace fedli {
namespace {

void require_returns(std::span<const ClientReturn> returns) {
  if (returns.empty()) throw ProtocolError("no client returns this round");
}

}  // namespace

void DfwConfig::validate() const {
  if (!(proximal_eta > 0.0)) throw ConfigError("dfw proximal eta must be positive");
  if (!(weight_decay_lambda >= 0.0)) throw ConfigError("dfw weight decay must be nonnegative");
  if (!(epsilon_denominator > 0.0)) throw ConfigError("dfw epsilon must be positive");
}

void FedAdamConfig::validate() const {
  if (!(eta_g > 0.0)) throw ConfigError("fedadam eta_g must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("fedadam beta1 out of [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("fedadam beta2 out of [0,1)");
  if (!(tau > 0.0)) throw ConfigError("fedadam tau must be positive");
}

double function_sync(std::span<const ClientReturn> returns, const SyncPolicy& policy) {
  require_returns(returns);
  double num = 0.0;
  double den = 0.0;
  for (const ClientReturn& r : returns) {
    const double weight = policy.function_sync == FunctionSyncPolicy::kShardWeightedMean
                              ? static_cast<double>(r.shard_size)
                              : 1.0;
    num += weight * r.objective_value;
    den += weight;
  }
  if (!(den > 0.0)) throw ProtocolError("function sync: all shard weights are zero");
  return num / den;
}

double step_size_sync(std::span<const ClientReturn> returns, const SyncPolicy& policy) {
  require_returns(returns);
  if (policy.step_size_sync == StepSizeSyncPolicy::kUnit) return 1.0;
  double best = returns.front().last_step_size;
  for (const ClientReturn& r : returns) best = std::max(best, r.last_step_size);
  return best;
}

double dfw_step_size(const ParamVector& w_t, const ParamVector& delta, double f_g,
                     const DfwConfig& cfg) {
  cfg.validate();
  internal::require_same_dimension(w_t, delta, "server_update_dfw");
  const double delta_sq = delta.squaredNorm();
  if (delta_sq == 0.0) return 0.0;
  const double eta = cfg.proximal_eta;
  const double decay_term = eta * delta.dot(cfg.weight_decay_lambda * w_t);
  const double denom = eta * delta_sq + cfg.epsilon_denominator;
  const double raw = cfg.gamma_formula == GammaFormula::kPseudoObjective
                         ? (f_g - decay_term) / denom
                         : -decay_term + f_g / denom;
  if (std::isnan(raw)) return 0.0;
  return std::clamp(raw, 0.0, 1.0);
}

ParamVector apply_dfw_step(const ParamVector& w_t, const ParamVector& delta, double gamma,
                           const DfwConfig& cfg) {
  internal::require_same_dimension(w_t, delta, "server_update_dfw");
  return w_t - cfg.proximal_eta * (cfg.weight_decay_lambda * w_t + gamma * delta);
}

DfwStep server_update_dfw(const ParamVector& w_t, const ParamVector& delta, double f_g,
                          const DfwConfig& cfg) {
  const double gamma = dfw_step_size(w_t, delta, f_g, cfg);
  return {apply_dfw_step(w_t, delta, gamma, cfg), gamma};
}

ServerState server_update_fedadam(const ServerState& state, const ParamVector& delta,
                                  const FedAdamConfig& cfg) {
  cfg.validate();
  internal::require_same_dimension(state.global_model, delta, "server_update_fedadam");
  ServerState next = state;
  const Index d = delta.size();
  ParamVector m = state.adam_m.value_or(ParamVector::Zero(d));
  ParamVector v = state.adam_v.value_or(ParamVector::Zero(d));
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * delta;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * delta.cwiseProduct(delta);
  next.global_model =
      state.global_model - cfg.eta_g * (m.array() / (v.array().sqrt() + cfg.tau)).matrix();
  next.adam_m = std::move(m);
  next.adam_v = std::move(v);
  return next;
}

FedExpStep server_update_fedexp(const ParamVector& w_t,
                                std::span<const ParamVector> per_client_deltas,
                                double epsilon) {
  if (per_client_deltas.empty()) throw ProtocolError("no client returns this round");
  if (!(epsilon >= 0.0)) throw ConfigError("fedexp epsilon must be nonnegative");
  const ParamVector mean = aggregate_deltas(per_client_deltas);
  internal::require_same_dimension(w_t, mean, "server_update_fedexp");
  double sum_sq = 0.0;
  for (const ParamVector& d : per_client_deltas) sum_sq += d.squaredNorm();
  const double s = static_cast<double>(per_client_deltas.size());
  const double denom = 2.0 * s * (mean.squaredNorm() + epsilon);
  FedExpStep out;
  out.eta_g = denom > 0.0 ? std::max(1.0, sum_sq / denom) : 1.0;
  out.next = w_t - out.eta_g * mean;
  return out;
}

ValueAndGradient fedprox_client_objective(const Objective& oracle, const ParamVector& w,
                                          const ParamVector& w_t, double mu_prox,
                                          const Batch& batch) {
  const ProximalObjective prox(oracle, w_t, mu_prox);
  return evaluate_with_gradient(prox, w, batch);
}

ScaffoldRound scaffold_round(const ServerState& state, std::span<const ClientId> sampled,
                             std::span<const ObjectivePtr> oracles, int local_steps,
                             const ScaffoldConfig& cfg, std::uint64_t seed) {
  if (!(cfg.eta_l > 0.0)) throw ConfigError("scaffold needs a positive local step size");
  if (local_steps < 1) throw ConfigError("local steps K must be at least 1");
  if (sampled.empty()) throw ProtocolError("no client returns this round");
  const ParamVector& w_t = state.global_model;
  const Index d = w_t.size();
  const std::size_t n = oracles.size();

  ScaffoldRound out;
  out.state = state;
  ServerState& next = out.state;
  if (!next.server_control) next.server_control = ParamVector::Zero(d);
  if (next.client_controls.size() != n) next.client_controls.assign(n, ParamVector::Zero(d));
  const ParamVector c = *next.server_control;

  std::vector<ParamVector> deltas;
  ParamVector control_increment = ParamVector::Zero(d);
  for (ClientId id : sampled) {
    if (id >= n) throw ConfigError("sampled client id outside the federation");
    const Objective& oracle = *oracles[id];
    const ParamVector& c_i = state.client_controls.size() == n ? state.client_controls[id]
                                                                : next.client_controls[id];
    EpochBatchSampler sampler(oracle.num_rows(), cfg.batch_size,
                              RngStream(seed, state.round_index, StreamPurpose::kBatchSampling, id));
    ParamVector w = w_t;
    for (int k = 0; k < local_steps; ++k) {
      const ParamVector g = stochastic_gradient(oracle, w, sampler.next());
      w -= cfg.eta_l * (g - c_i + c);
    }
    require_finite(w, "scaffold local model");
    ParamVector delta = w_t - w;
    ParamVector c_new = c_i - c + delta / (static_cast<double>(local_steps) * cfg.eta_l);
    control_increment += c_new - c_i;
    next.client_controls[id] = std::move(c_new);

    ClientReturn r;
    r.client_id = id;
    r.model = w;
    r.last_step_size = cfg.eta_l;
    r.objective_value = oracle.value(w, Batch::full(oracle.num_rows()).rows);
    r.shard_size = static_cast<std::size_t>(oracle.num_rows());
    out.returns.push_back(std::move(r));
    deltas.push_back(std::move(delta));
  }
  out.aggregate_delta = aggregate_deltas(deltas);
  next.global_model = server_update_gd(w_t, out.aggregate_delta, cfg.eta_g);
  *next.server_control = c + control_increment / static_cast<double>(n);
  return out;
}

}  // namespace fedli
