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

// Command-line front end: run, preset, partition, validate, sweep.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fedli/config.hpp"
#include "fedli/dataset.hpp"
#include "fedli/partition.hpp"

namespace {

namespace fs = std::filesystem;

int partition_command(const std::string& input, double alpha, std::size_t clients, std::uint64_t seed,
                      const fs::path& out) {
  using namespace fedli;
  const Dataset data = read_dataset(input);
  data.validate();
  PartitionConfig cfg;
  cfg.alpha = alpha;
  cfg.num_clients = clients;
  cfg.seed = seed;
  const std::vector<int> labels(data.labels.data(), data.labels.data() + data.labels.size());
  const auto shards = dirichlet_partition(labels, cfg);

  fs::create_directories(out);
  nlohmann::ordered_json manifest;
  manifest["source"] = input;
  manifest["alpha"] = alpha;
  manifest["seed"] = seed;
  manifest["num_classes"] = data.num_classes;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < shards.size(); ++i) {
    const Dataset shard = subset(data, shards[i]);
    const std::string file = "client_" + std::to_string(i) + ".csv";
    write_csv(out / file, shard);
    std::vector<std::size_t> histogram(static_cast<std::size_t>(data.num_classes), 0);
    for (std::size_t r : shards[i]) ++histogram[static_cast<std::size_t>(data.labels(static_cast<Index>(r)))];
    entries.push_back({{"client_id", i}, {"row_count", shards[i].size()}, {"label_histogram", histogram},
                       {"file", file}});
  }
  manifest["clients"] = entries;
  std::ofstream f(out / "manifest.json");
  f << manifest.dump(2) << '\n';
  if (!f) throw fedli::InputError("cannot write " + (out / "manifest.json").string());
  std::cout << "wrote " << shards.size() << " shards to " << out.string() << '\n';
  return fedli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated optimization simulator with line-search clients"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  run->add_option("--config", config_path, "Config file")->required();
  auto* run_seed = run->add_option("--seed", seed, "Override the simulation seed");
  run->add_option("--out", out_dir, "Output directory (default: output.dir of the config)");

  std::string preset_name;
  bool print_only = false;
  auto* pre = app.add_subcommand("preset", "Print or run a named preset");
  pre->add_option("name", preset_name, "Preset name")->required();
  pre->add_flag("--print", print_only, "Print the preset config as JSON instead of running it");
  auto* pre_seed = pre->add_option("--seed", seed, "Override the simulation seed");
  pre->add_option("--out", out_dir, "Output directory");

  std::string input;
  double alpha = 0.1;
  std::size_t clients = 100;
  std::uint64_t part_seed = 0;
  auto* part = app.add_subcommand("partition", "Split a dataset into Dirichlet label-skewed shards");
  part->add_option("--input", input, "CSV or FLDS dataset")->required();
  part->add_option("--alpha", alpha, "Dirichlet concentration");
  part->add_option("--clients", clients, "Number of clients");
  part->add_option("--seed", part_seed, "Partition seed");
  part->add_option("--out", out_dir, "Output directory")->required();

  auto* val = app.add_subcommand("validate", "Check a config without running it");
  val->add_option("--config", config_path, "Config file")->required();

  std::string sweep_preset;
  auto* sweep = app.add_subcommand("sweep", "Run a hyperparameter grid");
  auto* sweep_p = sweep->add_option("--preset", sweep_preset, "Preset holding the grid");
  auto* sweep_c = sweep->add_option("--config", config_path, "Config holding the grid");
  sweep_p->excludes(sweep_c);
  sweep->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      fedli::ExperimentConfig cfg = fedli::load_config(config_path);
      if (*run_seed) cfg.simulation.seed = seed;
      return fedli::run_command(cfg, out_dir.empty() ? cfg.output.dir : out_dir, std::cout, std::cerr);
    }
    if (*pre) {
      fedli::ExperimentConfig cfg = fedli::preset(preset_name);
      if (*pre_seed) cfg.simulation.seed = seed;
      if (print_only) {
        std::cout << fedli::to_json(cfg).dump(2) << '\n';
        return fedli::kExitOk;
      }
      const fs::path out = out_dir.empty() ? cfg.output.dir : out_dir;
      if (cfg.sweep) return fedli::sweep_command(cfg, out, std::cout, std::cerr);
      return fedli::run_command(cfg, out, std::cout, std::cerr);
    }
    if (*part) return partition_command(input, alpha, clients, part_seed, out_dir);
    if (*val) {
      const fedli::ExperimentConfig cfg = fedli::load_config(config_path);
      std::cout << "ok: " << cfg.objective << " / " << cfg.server_algo << '\n';
      return fedli::kExitOk;
    }
    if (*sweep) {
      if (sweep_preset.empty() && config_path.empty()) throw fedli::ConfigError("sweep needs --preset or --config");
      const fedli::ExperimentConfig cfg =
          sweep_preset.empty() ? fedli::load_config(config_path) : fedli::preset(sweep_preset);
      return fedli::sweep_command(cfg, out_dir.empty() ? cfg.output.dir : out_dir, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return fedli::kExitFailure;
  }
  return fedli::kExitFailure;
}
