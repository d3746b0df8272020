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

#ifndef FEDLI_CORE_HPP_
#define FEDLI_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedli/errors.hpp"

namespace fedli {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Carrier for models and for differences between models.
using ParamVector = VectorX<double>;

using Index = Eigen::Index;
using ClientId = std::size_t;

namespace internal {

template <typename DerivedA, typename DerivedB>
void require_same_dimension(const Eigen::MatrixBase<DerivedA>& a,
                            const Eigen::MatrixBase<DerivedB>& b,
                            const char* what) {
  if (a.size() != b.size()) {
    throw ConfigError(std::string(what) + ": dimension mismatch (" +
                      std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
  }
}

}  // namespace internal

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& v, const char* what) {
  if (!v.allFinite()) {
    throw NumericError(std::string(what) + ": non-finite entry");
  }
}

// Δ = w_global − w_local. Positive entries mean the client moved below the
// global value in that coordinate.
template <typename DerivedA, typename DerivedB>
VectorX<typename DerivedA::Scalar> model_state_difference(
    const Eigen::MatrixBase<DerivedA>& w_global,
    const Eigen::MatrixBase<DerivedB>& w_local) {
  internal::require_same_dimension(w_global, w_local, "model_state_difference");
  return w_global - w_local;
}

// Arithmetic mean of the deltas, accumulated strictly in list order so the
// result does not depend on how the deltas were produced.
template <typename Scalar>
VectorX<Scalar> aggregate_deltas(std::span<const VectorX<Scalar>> deltas) {
  if (deltas.empty()) {
    throw ProtocolError("no client returns this round");
  }
  VectorX<Scalar> sum = deltas.front();
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    internal::require_same_dimension(sum, deltas[i], "aggregate_deltas");
    sum += deltas[i];
  }
  return sum / static_cast<Scalar>(deltas.size());
}

template <typename Scalar>
VectorX<Scalar> aggregate_deltas(const std::vector<VectorX<Scalar>>& deltas) {
  return aggregate_deltas(std::span<const VectorX<Scalar>>(deltas));
}

// What a client sends back after its local run.
struct ClientReturn {
  ClientId client_id = 0;
  ParamVector model;
  double last_step_size = 0.0;
  double objective_value = 0.0;
  std::size_t shard_size = 0;
};

struct PseudoGradient {
  std::map<ClientId, ParamVector> per_client;
  ParamVector aggregate;
};

// Builds Δ_t^i for every return and their mean, reduced in ascending client
// id order.
PseudoGradient make_pseudo_gradient(const ParamVector& w_global,
                                    std::span<const ClientReturn> returns);

// Constants of the smoothness/convexity/variance/Lipschitz assumptions.
// Zero means "not derivable" for every field.
struct TheoreticalConstants {
  double smoothness_L = 0.0;
  double strong_convexity_mu = 0.0;
  double variance_G = 0.0;
  double lipschitz_beta = 0.0;

  void validate() const;
  bool operator==(const TheoreticalConstants&) const = default;
};

struct SimulationConfig {
  std::size_t total_clients = 100;   // N
  std::size_t sampled_per_round = 10;  // S
  std::size_t local_steps = 1;       // K
  std::size_t rounds = 500;          // T
  std::uint64_t seed = 0;

  // ρ = S/N.
  double participation() const {
    return static_cast<double>(sampled_per_round) /
           static_cast<double>(total_clients);
  }
  void validate() const;
  bool operator==(const SimulationConfig&) const = default;
};

}  // namespace fedli

#endif  // FEDLI_CORE_HPP_
