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

#ifndef FEDLI_PROBLEMS_HPP_
#define FEDLI_PROBLEMS_HPP_

#include "fedli/config.hpp"
#include "fedli/orchestrator.hpp"

namespace fedli {

// Builds the N client objectives for the config's objective family, with the
// data partitioned by the config's Dirichlet settings where applicable.
Federation build_federation(const ExperimentConfig& cfg);

// Local and server algorithm settings selected by the config.
AlgorithmBundle make_bundle(const ExperimentConfig& cfg);

// The bound attached when cfg.bound is "auto".
BoundKind resolve_bound(const ExperimentConfig& cfg);

}  // namespace fedli

#endif  // FEDLI_PROBLEMS_HPP_
