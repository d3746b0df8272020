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

#ifndef FEDLI_PARTITION_HPP_
#define FEDLI_PARTITION_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "fedli/core.hpp"

namespace fedli {

struct PartitionConfig {
  double alpha = 0.1;  // Dirichlet concentration
  std::size_t num_clients = 100;
  std::uint64_t seed = 0;
  std::size_t min_samples_per_client = 1;
  // Full resamples tried before surplus rows are moved greedily.
  int max_resamples = 100;

  void validate() const;
};

// Label-skewed split: for each class c draw p_c ~ Dir(α·1_N) and cut the
// class's (shuffled) rows into consecutive runs of sizes ≈ p_c·n_c.
// Returns one ascending row-index list per client. Every row lands in
// exactly one list and each list holds at least min_samples_per_client rows.
std::vector<std::vector<std::size_t>> dirichlet_partition(std::span<const int> labels,
                                                          const PartitionConfig& cfg);

// S distinct client ids drawn uniformly without replacement, returned in
// ascending order. Depends only on (seed, round).
std::vector<ClientId> sample_clients(std::size_t num_clients, std::size_t sampled,
                                     std::uint64_t round, std::uint64_t seed);

}  // namespace fedli

#endif  // FEDLI_PARTITION_HPP_
