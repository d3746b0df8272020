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

#ifndef FEDLI_CONFIG_HPP_
#define FEDLI_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedli/client.hpp"
#include "fedli/core.hpp"
#include "fedli/server.hpp"

namespace fedli {

// Shape of the synthetic problem behind an objective family. Fields that a
// family does not use are ignored by it.
struct ProblemSettings {
  std::size_t dimension = 4;
  double l2 = 0.0;
  std::size_t hidden = 16;
  std::size_t rows_per_client = 50;
  int num_classes = 10;
  double separation = 3.0;  // blob centre distance from the origin
  double margin = 0.1;      // separable-binary margin
  double test_fraction = 0.2;
  double target_scale = 1.0;  // spread of the quadratic centres b_i
  std::string dataset;        // CSV/FLDS file replacing the synthetic data

  bool operator==(const ProblemSettings&) const = default;
};

struct PartitionSettings {
  double alpha = 0.1;
  std::uint64_t seed = 0;
  std::size_t min_samples_per_client = 1;

  bool operator==(const PartitionSettings&) const = default;
};

struct ClientSettings {
  double eta_l = 0.01;  // plain sgd step size
  std::size_t batch_size = 32;
  ObjectiveEval objective_eval = ObjectiveEval::kFullShard;
  ArmijoConfig armijo;

  bool operator==(const ClientSettings&) const = default;
};

struct ServerSettings {
  double eta_g = 1.0;  // fedavg, fedprox and scaffold
  SyncPolicy sync;
  DfwConfig dfw;
  FedAdamConfig fedadam;
  double fedprox_mu = 0.01;
  double fedexp_epsilon = 1e-3;

  bool operator==(const ServerSettings&) const = default;
};

// Grid expanded by the sweep command. Algorithms that have no global step
// size ignore eta_g; fedexp pairs eta_l with fedexp_epsilon instead.
struct SweepSettings {
  std::vector<std::string> server_algos;
  std::vector<double> eta_l;
  std::vector<double> eta_g;
  std::vector<double> fedexp_epsilon;

  bool operator==(const SweepSettings&) const = default;
};

struct OutputSettings {
  std::string dir = "fedli-out";
  bool csv = true;

  bool operator==(const OutputSettings&) const = default;
};

struct ExperimentConfig {
  std::string preset;  // preset this config started from, if any
  std::string objective = "quadratic-sc";
  ProblemSettings problem;
  PartitionSettings partition;
  SimulationConfig simulation;
  std::string client_algo = "armijo-sgd";
  ClientSettings client;
  std::string server_algo = "fedli-ls";
  ServerSettings server;
  bool diagnostic_mode = false;
  // auto | none | strongly-convex | convex-gap | nonconvex
  std::string bound = "auto";
  // prescribed_models[t][j]: model returned by the j-th sampled client in
  // round t instead of local training.
  std::vector<std::vector<std::vector<double>>> prescribed_models;
  std::vector<std::uint64_t> seeds;  // sweep repetitions
  std::optional<SweepSettings> sweep;
  OutputSettings output;

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

const std::vector<std::string>& objective_names();
const std::vector<std::string>& server_algo_names();

// Parses and validates. Missing keys take defaults; unknown keys and type
// mismatches raise ConfigError naming the JSON path.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

const std::vector<std::string>& preset_names();
ExperimentConfig preset(const std::string& name);

// Exit codes of run and sweep.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitRegimeFlag = 2;

struct BoundCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunSummary {
  nlohmann::ordered_json json;
  std::vector<BoundCheck> checks;
  bool invalid_regime = false;
  int exit_code = kExitOk;
};

// Runs one simulation, writes records.jsonl, records.csv (if enabled) and
// summary.json into `out_dir`, and returns the summary.
RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

// run_experiment with failures mapped to exit code 1 and reported on `err`.
int run_command(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                std::ostream& log, std::ostream& err);

// Expands the sweep grid (times the seed list) and writes sweep.csv with one
// row per cell, aggregated over seeds.
int sweep_command(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                  std::ostream& log, std::ostream& err);

}  // namespace fedli

#endif  // FEDLI_CONFIG_HPP_
