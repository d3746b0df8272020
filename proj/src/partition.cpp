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

#include "fedli/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fedli/rng.hpp"

namespace fedli {
namespace {

std::vector<double> sample_dirichlet(double alpha, std::size_t n, RngStream& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(n);
  double total = 0.0;
  for (double& v : p) {
    v = gamma(rng);
    total += v;
  }
  if (!(total > 0.0)) {
    // Every gamma draw underflowed (tiny alpha); the limit is a one-hot.
    std::fill(p.begin(), p.end(), 0.0);
    p[rng.uniform_index(n)] = 1.0;
    return p;
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<std::vector<std::size_t>> draw_partition(
    const std::map<int, std::vector<std::size_t>>& rows_by_class,
    const PartitionConfig& cfg, RngStream& rng) {
  std::vector<std::vector<std::size_t>> shards(cfg.num_clients);
  for (const auto& [label, class_rows] : rows_by_class) {
    std::vector<std::size_t> rows = class_rows;
    shuffle(rows, rng);
    const std::vector<double> p = sample_dirichlet(cfg.alpha, cfg.num_clients, rng);
    const double n = static_cast<double>(rows.size());
    double cumulative = 0.0;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < cfg.num_clients; ++k) {
      cumulative += p[k];
      std::size_t end = k + 1 == cfg.num_clients
                            ? rows.size()
                            : std::min(rows.size(), static_cast<std::size_t>(std::llround(cumulative * n)));
      end = std::max(end, begin);
      shards[k].insert(shards[k].end(), rows.begin() + static_cast<std::ptrdiff_t>(begin),
                       rows.begin() + static_cast<std::ptrdiff_t>(end));
      begin = end;
    }
  }
  return shards;
}

bool meets_minimum(const std::vector<std::vector<std::size_t>>& shards, std::size_t min) {
  return std::all_of(shards.begin(), shards.end(),
                     [min](const auto& s) { return s.size() >= min; });
}

// Moves rows from the largest shards to deficient ones until every shard
// meets the minimum.
void greedy_repair(std::vector<std::vector<std::size_t>>& shards, std::size_t min) {
  for (auto& needy : shards) {
    while (needy.size() < min) {
      auto donor = std::max_element(shards.begin(), shards.end(),
                                    [](const auto& a, const auto& b) { return a.size() < b.size(); });
      if (donor->size() <= min) throw ConfigError("partition: minimum samples infeasible");
      needy.push_back(donor->back());
      donor->pop_back();
    }
  }
}

}  // namespace

void PartitionConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("dirichlet alpha must be positive");
  if (num_clients == 0) throw ConfigError("partition needs at least one client");
  if (min_samples_per_client == 0) throw ConfigError("min samples per client must be positive");
  if (max_resamples < 0) throw ConfigError("max resamples must be nonnegative");
}

std::vector<std::vector<std::size_t>> dirichlet_partition(std::span<const int> labels,
                                                          const PartitionConfig& cfg) {
  cfg.validate();
  if (labels.size() < cfg.num_clients * cfg.min_samples_per_client) {
    throw ConfigError("partition: " + std::to_string(labels.size()) + " rows cannot give " +
                      std::to_string(cfg.num_clients) + " clients " +
                      std::to_string(cfg.min_samples_per_client) + " rows each");
  }
  std::map<int, std::vector<std::size_t>> rows_by_class;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0) throw InputError("partition: negative label");
    rows_by_class[labels[r]].push_back(r);
  }

  std::vector<std::vector<std::size_t>> shards;
  for (int attempt = 0; attempt <= cfg.max_resamples; ++attempt) {
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(attempt), StreamPurpose::kPartition);
    shards = draw_partition(rows_by_class, cfg, rng);
    if (meets_minimum(shards, cfg.min_samples_per_client)) break;
  }
  greedy_repair(shards, cfg.min_samples_per_client);
  for (auto& s : shards) std::sort(s.begin(), s.end());
  return shards;
}

std::vector<ClientId> sample_clients(std::size_t num_clients, std::size_t sampled,
                                     std::uint64_t round, std::uint64_t seed) {
  if (sampled == 0) throw ConfigError("must sample at least one client");
  if (sampled > num_clients) {
    throw ConfigError("cannot sample " + std::to_string(sampled) + " of " +
                      std::to_string(num_clients) + " clients");
  }
  RngStream rng(seed, round, StreamPurpose::kClientSampling);
  std::vector<ClientId> ids = iota_vector(num_clients);
  for (std::size_t i = 0; i < sampled; ++i) {
    const std::size_t j = i + rng.uniform_index(num_clients - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(sampled);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace fedli
