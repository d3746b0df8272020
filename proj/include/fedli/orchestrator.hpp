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

#ifndef FEDLI_ORCHESTRATOR_HPP_
#define FEDLI_ORCHESTRATOR_HPP_

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedli/bounds.hpp"
#include "fedli/client.hpp"
#include "fedli/core.hpp"
#include "fedli/dataset.hpp"
#include "fedli/objectives.hpp"
#include "fedli/server.hpp"

namespace fedli {

// The N client objectives plus whatever global facts are known about their
// uniform mean f = (1/N)·Σ f_i.
struct Federation {
  std::vector<ObjectivePtr> clients;  // indexed by client id
  std::optional<ParamVector> optimum;
  std::optional<double> optimal_value;
  TheoreticalConstants constants;
  std::optional<Dataset> test_set;
  ParamVector initial_model;

  std::size_t size() const { return clients.size(); }
  double global_value(const ParamVector& w) const;
  ParamVector global_gradient(const ParamVector& w) const;
  std::optional<double> test_accuracy(const ParamVector& w) const;
  void validate() const;
};

struct FedLiLs {
  SyncPolicy sync;
};
struct FedLiLu {
  DfwConfig dfw;
  SyncPolicy sync;
};
struct FedAvg {
  double eta_g = 1.0;
};
struct FedProx {
  double mu_prox = 0.01;
  double eta_g = 1.0;
};
struct Scaffold {
  double eta_g = 1.0;
};
struct FedAdam {
  FedAdamConfig adam;
};
struct FedExp {
  double epsilon = 1e-3;
};

using ServerAlgorithm = std::variant<FedLiLs, FedLiLu, FedAvg, FedProx, Scaffold, FedAdam, FedExp>;

std::string algorithm_name(const ServerAlgorithm& algo);

// Which theoretical bound is attached to each record.
enum class BoundKind { kNone, kStronglyConvex, kConvexGap, kNonconvex };

struct AlgorithmBundle {
  LocalConfig local;
  ServerAlgorithm server = FedLiLs{};
  // Replaces local training: prescribed_models[t][j] is the model returned by
  // the j-th sampled client (ascending id) in round t.
  std::vector<std::vector<ParamVector>> prescribed_models;
  // Full-population loss and the lemma checks every round. Costs O(N)
  // oracle calls per round.
  bool diagnostic_mode = false;
  BoundKind bound = BoundKind::kNone;
};

// Measured sides of the per-round inequalities, diagnostic mode only.
struct RoundDiagnostics {
  double full_loss_before = 0.0;  // f(w_t)
  double full_loss_after = 0.0;   // f(w_{t+1})
  double global_grad_sq = 0.0;    // ‖∇f(w_t)‖²
  // ‖Δ_t‖² against (η_lmax²K/S)·Σ_{i,k}‖∇f_i(w_{t,k−1}^i)‖² + η_lmax²K²·G_est.
  // Absent when local training was replaced or not instrumented.
  std::optional<double> second_moment_lhs;
  std::optional<double> second_moment_rhs;
  // K·Σ_i‖w_t − w_{t,K}^i‖² against (η_lmax·N·K²/c)·(f(w_t) − f(w_{t+1})).
  // Absent for non-Armijo clients, where c is undefined.
  std::optional<double> drift_lhs;
  std::optional<double> drift_rhs;
};

// Record t describes the update w_t → w_{t+1}; model-dependent fields are
// measured at w_{t+1}.
struct RoundRecord {
  std::size_t round = 0;
  double train_loss = 0.0;  // mean of the sampled clients' reported values
  std::optional<double> test_accuracy;
  double eta_g = 1.0;
  std::optional<double> gamma;
  double delta_norm = 0.0;
  std::optional<double> dist_sq;
  std::optional<double> bound;
  std::optional<RoundDiagnostics> diagnostics;
};

struct RoundOutcome {
  ServerState state;
  RoundRecord record;
  std::vector<ClientReturn> returns;
};

// Inputs of the attached bound, derived from the federation and the bundle.
BoundInputs bound_inputs(const Federation& fed, const SimulationConfig& sim,
                         const AlgorithmBundle& algo);

// Samples S_t, runs the sampled clients (concurrently, capped by
// FEDLI_THREADS), aggregates and applies the server rule. Any client failure
// aborts the round.
RoundOutcome run_round(const ServerState& state, const SimulationConfig& sim,
                       const Federation& fed, const AlgorithmBundle& algo);

ServerState initial_state(const Federation& fed);

struct StopRules {
  double max_loss = 1e6;
};

struct SimulationResult {
  std::vector<RoundRecord> records;
  ServerState final_state;
  bool stopped_early = false;
  // Set when the global model became non-finite; records end at the last
  // valid round.
  bool numeric_failure = false;
  std::string stop_reason;
  // Bound regime flags raised while evaluating the attached bound.
  bool bound_invalid_regime = false;
  bool bound_negative = false;
};

SimulationResult run_simulation(const SimulationConfig& sim, const Federation& fed,
                                const AlgorithmBundle& algo, const StopRules& stop = {});

// Per-round factor fitted to the records' dist_sq values.
double contraction_fit(std::span<const RoundRecord> records);

// Worker count for client execution: FEDLI_THREADS if set, else hardware
// concurrency, at least 1.
std::size_t client_thread_cap();

void write_jsonl(std::ostream& out, std::span<const RoundRecord> records);
void write_csv(std::ostream& out, std::span<const RoundRecord> records);
void write_jsonl(const std::filesystem::path& path, std::span<const RoundRecord> records);
void write_csv(const std::filesystem::path& path, std::span<const RoundRecord> records);

}  // namespace fedli

#endif  // FEDLI_ORCHESTRATOR_HPP_
