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

#include "fedli/core.hpp"

namespace fedli {

PseudoGradient make_pseudo_gradient(const ParamVector& w_global,
                                    std::span<const ClientReturn> returns) {
  if (returns.empty()) {
    throw ProtocolError("no client returns this round");
  }
  PseudoGradient out;
  for (const ClientReturn& r : returns) {
    require_finite(r.model, "client model");
    auto [it, inserted] =
        out.per_client.emplace(r.client_id, model_state_difference(w_global, r.model));
    if (!inserted) {
      throw ProtocolError("duplicate return from client " +
                          std::to_string(r.client_id));
    }
  }
  std::vector<ParamVector> ordered;
  ordered.reserve(out.per_client.size());
  for (const auto& [id, delta] : out.per_client) ordered.push_back(delta);
  out.aggregate = aggregate_deltas(ordered);
  return out;
}

void TheoreticalConstants::validate() const {
  if (smoothness_L < 0 || strong_convexity_mu < 0 || variance_G < 0 ||
      lipschitz_beta < 0) {
    throw ConfigError("theoretical constants must be nonnegative");
  }
  if (strong_convexity_mu > 0 && smoothness_L > 0 &&
      strong_convexity_mu > smoothness_L * (1 + 1e-12)) {
    throw ConfigError("strong convexity mu exceeds smoothness L");
  }
}

void SimulationConfig::validate() const {
  if (total_clients == 0) throw ConfigError("N must be positive");
  if (sampled_per_round == 0) throw ConfigError("S must be positive");
  if (sampled_per_round > total_clients) {
    throw ConfigError("S must not exceed N");
  }
  if (local_steps == 0) throw ConfigError("K must be positive");
  if (rounds == 0) throw ConfigError("T must be positive");
}

}  // namespace fedli
