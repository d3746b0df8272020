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

#include "fedli/config.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "fedli/bounds.hpp"
#include "fedli/problems.hpp"

namespace fedli {

using nlohmann::json;

namespace {

bool contains(const std::vector<std::string>& names, const std::string& s) {
  return std::find(names.begin(), names.end(), s) != names.end();
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const std::string& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported with their full path.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    const json* v = take(key);
    if (!v) return;
    try {
      convert(*v, out);
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  std::optional<ObjectReader> child(const char* key) {
    const json* v = take(key);
    if (!v) return std::nullopt;
    return ObjectReader(*v, where(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError("unknown key \"" + key + "\" at " + where());
    }
  }

 private:
  const json* take(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key = "") const {
    const std::string base = path_.empty() ? "config" : path_;
    return key.empty() ? base : base + "." + key;
  }

  static void convert(const json& v, double& out) {
    if (!v.is_number()) throw ConfigError("expected a number");
    out = v.get<double>();
  }
  static void convert(const json& v, bool& out) {
    if (!v.is_boolean()) throw ConfigError("expected a boolean");
    out = v.get<bool>();
  }
  static void convert(const json& v, std::string& out) {
    if (!v.is_string()) throw ConfigError("expected a string");
    out = v.get<std::string>();
  }
  static void convert(const json& v, int& out) {
    if (!v.is_number_integer()) throw ConfigError("expected an integer");
    out = v.get<int>();
  }
  template <std::unsigned_integral T>
  static void convert(const json& v, T& out) {
    if (!v.is_number_unsigned()) throw ConfigError("expected a nonnegative integer");
    out = v.get<T>();
  }
  template <typename T>
  static void convert(const json& v, std::vector<T>& out) {
    if (!v.is_array()) throw ConfigError("expected an array");
    out.clear();
    for (const json& e : v) {
      T item{};
      convert(e, item);
      out.push_back(std::move(item));
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<ObjectiveEval> kObjectiveEvals[] = {{ObjectiveEval::kFullShard, "full-shard"},
                                                       {ObjectiveEval::kLastBatch, "last-batch"}};
constexpr EnumName<ResetScaling> kResetScalings[] = {{ResetScaling::kExponent, "exponent"},
                                                     {ResetScaling::kMultiplicative, "multiplicative"}};
constexpr EnumName<FunctionSyncPolicy> kFunctionSyncs[] = {
    {FunctionSyncPolicy::kUniformMean, "uniform"}, {FunctionSyncPolicy::kShardWeightedMean, "shard-weighted"}};
constexpr EnumName<StepSizeSyncPolicy> kStepSyncs[] = {{StepSizeSyncPolicy::kUnit, "unit"},
                                                       {StepSizeSyncPolicy::kMaxOfClients, "max-of-clients"}};
constexpr EnumName<GammaFormula> kGammaFormulas[] = {{GammaFormula::kPseudoObjective, "pseudo-objective"},
                                                     {GammaFormula::kLiteralDual, "literal-dual"}};

template <typename E, std::size_t N>
const char* enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

template <typename E, std::size_t N>
void read_enum(ObjectReader& r, const char* key, const EnumName<E> (&table)[N], E& out) {
  std::string s = enum_name(table, out);
  r.get(key, s);
  for (const auto& e : table) {
    if (s == e.name) {
      out = e.value;
      return;
    }
  }
  std::vector<std::string> names;
  for (const auto& e : table) names.emplace_back(e.name);
  throw ConfigError("invalid value \"" + s + "\" for " + key + " (expected one of " + join(names) + ")");
}

void read_armijo(ObjectReader r, ArmijoConfig& a) {
  r.get("c", a.c);
  r.get("beta_back", a.beta_back);
  r.get("delta", a.delta);
  r.get("eta_lmax", a.eta_lmax);
  r.get("opt", a.opt);
  r.get("min_step", a.min_step);
  r.get("max_backtracks", a.max_backtracks);
  read_enum(r, "reset_scaling", kResetScalings, a.reset_scaling);
  r.finish();
}

void read_client(ObjectReader r, ClientSettings& c) {
  r.get("eta_l", c.eta_l);
  r.get("batch_size", c.batch_size);
  read_enum(r, "objective_eval", kObjectiveEvals, c.objective_eval);
  if (auto a = r.child("armijo")) read_armijo(*a, c.armijo);
  r.finish();
}

void read_server(ObjectReader r, ServerSettings& s) {
  r.get("eta_g", s.eta_g);
  if (auto sync = r.child("sync")) {
    read_enum(*sync, "function", kFunctionSyncs, s.sync.function_sync);
    read_enum(*sync, "step_size", kStepSyncs, s.sync.step_size_sync);
    sync->finish();
  }
  if (auto dfw = r.child("dfw")) {
    dfw->get("eta", s.dfw.proximal_eta);
    dfw->get("lambda", s.dfw.weight_decay_lambda);
    read_enum(*dfw, "gamma_formula", kGammaFormulas, s.dfw.gamma_formula);
    dfw->get("epsilon", s.dfw.epsilon_denominator);
    dfw->finish();
  }
  if (auto adam = r.child("fedadam")) {
    adam->get("eta_g", s.fedadam.eta_g);
    adam->get("beta1", s.fedadam.beta1);
    adam->get("beta2", s.fedadam.beta2);
    adam->get("tau", s.fedadam.tau);
    adam->finish();
  }
  r.get("fedprox_mu", s.fedprox_mu);
  r.get("fedexp_epsilon", s.fedexp_epsilon);
  r.finish();
}

}  // namespace

const std::vector<std::string>& objective_names() {
  static const std::vector<std::string> names = {"quadratic-sc", "logistic-convex", "tinymlp-nonconvex",
                                                 "counterexample", "dirichlet-skew"};
  return names;
}

const std::vector<std::string>& server_algo_names() {
  static const std::vector<std::string> names = {"fedli-ls", "fedli-lu", "fedavg", "fedprox",
                                                 "scaffold", "fedadam", "fedexp"};
  return names;
}

void ExperimentConfig::validate() const {
  if (!contains(objective_names(), objective)) {
    throw ConfigError("unknown objective \"" + objective + "\" (available: " + join(objective_names()) + ")");
  }
  if (!contains(server_algo_names(), server_algo)) {
    throw ConfigError("unknown server_algo \"" + server_algo + "\" (available: " + join(server_algo_names()) + ")");
  }
  if (client_algo != "sgd" && client_algo != "armijo-sgd") {
    throw ConfigError("unknown client_algo \"" + client_algo + "\" (available: sgd, armijo-sgd)");
  }
  simulation.validate();
  client.armijo.validate();
  if (!(client.eta_l > 0.0)) throw ConfigError("client.eta_l must be positive");
  if (client.batch_size == 0) throw ConfigError("client.batch_size must be positive");
  server.dfw.validate();
  server.fedadam.validate();
  if (!(server.eta_g > 0.0)) throw ConfigError("server.eta_g must be positive");
  if (!(server.fedprox_mu >= 0.0)) throw ConfigError("server.fedprox_mu must be nonnegative");
  if (!(server.fedexp_epsilon >= 0.0)) throw ConfigError("server.fedexp_epsilon must be nonnegative");
  if (server_algo == "scaffold" && client_algo != "sgd") throw ConfigError("scaffold requires client_algo sgd");
  if (!(partition.alpha > 0.0)) throw ConfigError("partition.alpha must be positive");
  if (problem.dimension == 0) throw ConfigError("problem.dimension must be positive");
  if (!(problem.test_fraction >= 0.0 && problem.test_fraction < 1.0)) {
    throw ConfigError("problem.test_fraction must lie in [0,1)");
  }
  if (!(problem.l2 >= 0.0)) throw ConfigError("problem.l2 must be nonnegative");
  if (problem.num_classes < 2) throw ConfigError("problem.num_classes must be at least 2");
  if (problem.rows_per_client == 0) throw ConfigError("problem.rows_per_client must be positive");
  if (problem.hidden == 0) throw ConfigError("problem.hidden must be positive");
  static const std::vector<std::string> bounds = {"auto", "none", "strongly-convex", "convex-gap", "nonconvex"};
  if (!contains(bounds, bound)) throw ConfigError("unknown bound \"" + bound + "\" (available: " + join(bounds) + ")");
  if (objective == "counterexample" && simulation.total_clients != 2) {
    throw ConfigError("counterexample needs exactly N = 2 clients");
  }
  for (const auto& round : prescribed_models) {
    if (round.size() != simulation.sampled_per_round) {
      throw ConfigError("prescribed_models: each round needs one model per sampled client");
    }
  }
  if (sweep) {
    for (const std::string& a : sweep->server_algos) {
      if (!contains(server_algo_names(), a)) throw ConfigError("sweep: unknown server algorithm \"" + a + "\"");
    }
    if (sweep->server_algos.empty() || sweep->eta_l.empty()) {
      throw ConfigError("sweep needs server_algos and eta_l values");
    }
    for (const auto* grid : {&sweep->eta_l, &sweep->eta_g, &sweep->fedexp_epsilon}) {
      for (double v : *grid) {
        if (!(v > 0.0)) throw ConfigError("sweep grid values must be positive");
      }
    }
  }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  ObjectReader r(j, "");
  r.get("preset", cfg.preset);
  r.get("objective", cfg.objective);
  r.get("server_algo", cfg.server_algo);
  cfg.client_algo = cfg.server_algo == "fedli-ls" || cfg.server_algo == "fedli-lu" ? "armijo-sgd" : "sgd";
  r.get("client_algo", cfg.client_algo);
  if (auto p = r.child("problem")) {
    p->get("dimension", cfg.problem.dimension);
    p->get("l2", cfg.problem.l2);
    p->get("hidden", cfg.problem.hidden);
    p->get("rows_per_client", cfg.problem.rows_per_client);
    p->get("num_classes", cfg.problem.num_classes);
    p->get("separation", cfg.problem.separation);
    p->get("margin", cfg.problem.margin);
    p->get("test_fraction", cfg.problem.test_fraction);
    p->get("target_scale", cfg.problem.target_scale);
    p->get("dataset", cfg.problem.dataset);
    p->finish();
  }
  if (auto p = r.child("partition")) {
    p->get("alpha", cfg.partition.alpha);
    p->get("seed", cfg.partition.seed);
    p->get("min_samples_per_client", cfg.partition.min_samples_per_client);
    p->finish();
  }
  if (auto s = r.child("simulation")) {
    s->get("N", cfg.simulation.total_clients);
    s->get("S", cfg.simulation.sampled_per_round);
    s->get("K", cfg.simulation.local_steps);
    s->get("T", cfg.simulation.rounds);
    s->get("seed", cfg.simulation.seed);
    s->finish();
  }
  if (auto c = r.child("client")) read_client(*c, cfg.client);
  if (auto s = r.child("server")) read_server(*s, cfg.server);
  r.get("diagnostic_mode", cfg.diagnostic_mode);
  r.get("bound", cfg.bound);
  r.get("prescribed_models", cfg.prescribed_models);
  r.get("seeds", cfg.seeds);
  if (auto s = r.child("sweep")) {
    SweepSettings sw;
    s->get("server_algos", sw.server_algos);
    s->get("eta_l", sw.eta_l);
    s->get("eta_g", sw.eta_g);
    s->get("fedexp_epsilon", sw.fedexp_epsilon);
    s->finish();
    cfg.sweep = std::move(sw);
  }
  if (auto o = r.child("output")) {
    o->get("dir", cfg.output.dir);
    o->get("csv", cfg.output.csv);
    o->finish();
  }
  r.finish();
  cfg.validate();
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  const ArmijoConfig& a = cfg.client.armijo;
  const ServerSettings& s = cfg.server;
  json j = {
      {"preset", cfg.preset},
      {"objective", cfg.objective},
      {"problem",
       {{"dimension", cfg.problem.dimension},
        {"l2", cfg.problem.l2},
        {"hidden", cfg.problem.hidden},
        {"rows_per_client", cfg.problem.rows_per_client},
        {"num_classes", cfg.problem.num_classes},
        {"separation", cfg.problem.separation},
        {"margin", cfg.problem.margin},
        {"test_fraction", cfg.problem.test_fraction},
        {"target_scale", cfg.problem.target_scale},
        {"dataset", cfg.problem.dataset}}},
      {"partition",
       {{"alpha", cfg.partition.alpha},
        {"seed", cfg.partition.seed},
        {"min_samples_per_client", cfg.partition.min_samples_per_client}}},
      {"simulation",
       {{"N", cfg.simulation.total_clients},
        {"S", cfg.simulation.sampled_per_round},
        {"K", cfg.simulation.local_steps},
        {"T", cfg.simulation.rounds},
        {"seed", cfg.simulation.seed}}},
      {"client_algo", cfg.client_algo},
      {"client",
       {{"eta_l", cfg.client.eta_l},
        {"batch_size", cfg.client.batch_size},
        {"objective_eval", enum_name(kObjectiveEvals, cfg.client.objective_eval)},
        {"armijo",
         {{"c", a.c},
          {"beta_back", a.beta_back},
          {"delta", a.delta},
          {"eta_lmax", a.eta_lmax},
          {"opt", a.opt},
          {"min_step", a.min_step},
          {"max_backtracks", a.max_backtracks},
          {"reset_scaling", enum_name(kResetScalings, a.reset_scaling)}}}}},
      {"server_algo", cfg.server_algo},
      {"server",
       {{"eta_g", s.eta_g},
        {"sync",
         {{"function", enum_name(kFunctionSyncs, s.sync.function_sync)},
          {"step_size", enum_name(kStepSyncs, s.sync.step_size_sync)}}},
        {"dfw",
         {{"eta", s.dfw.proximal_eta},
          {"lambda", s.dfw.weight_decay_lambda},
          {"gamma_formula", enum_name(kGammaFormulas, s.dfw.gamma_formula)},
          {"epsilon", s.dfw.epsilon_denominator}}},
        {"fedadam",
         {{"eta_g", s.fedadam.eta_g}, {"beta1", s.fedadam.beta1}, {"beta2", s.fedadam.beta2}, {"tau", s.fedadam.tau}}},
        {"fedprox_mu", s.fedprox_mu},
        {"fedexp_epsilon", s.fedexp_epsilon}}},
      {"diagnostic_mode", cfg.diagnostic_mode},
      {"bound", cfg.bound},
      {"prescribed_models", cfg.prescribed_models},
      {"seeds", cfg.seeds},
      {"output", {{"dir", cfg.output.dir}, {"csv", cfg.output.csv}}},
  };
  if (cfg.sweep) {
    j["sweep"] = {{"server_algos", cfg.sweep->server_algos},
                  {"eta_l", cfg.sweep->eta_l},
                  {"eta_g", cfg.sweep->eta_g},
                  {"fedexp_epsilon", cfg.sweep->fedexp_epsilon}};
  }
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"quadratic-sc",   "logistic-convex", "tinymlp-nonconvex",
                                                 "counterexample", "dirichlet-skew",  "baseline-sweep"};
  return names;
}

ExperimentConfig preset(const std::string& name) {
  if (name == "strongly-convex-linear-rate") {
    ExperimentConfig cfg = preset("quadratic-sc");
    cfg.preset = name;
    return cfg;
  }
  ExperimentConfig cfg;
  cfg.preset = name;
  if (name == "quadratic-sc") {
    // Four rotated quadratics with spectrum [0.5, 2]: μ = 0.5, L = 2.
    // c = 0.75 sits between c_min = 0.7 (ρ = 1, η_lmax = 0.2) and
    // 1 − L·η_lmax/2 = 0.8, so the full step η_lmax always passes.
    cfg.objective = "quadratic-sc";
    cfg.problem.dimension = 4;
    cfg.simulation = {4, 4, 1, 200, 0};
    cfg.client_algo = "armijo-sgd";
    cfg.client.eta_l = 0.2;
    cfg.client.armijo.c = 0.75;
    cfg.client.armijo.eta_lmax = 0.2;
    cfg.server.dfw.weight_decay_lambda = 0.0;
    cfg.server.fedexp_epsilon = 0.1;
    cfg.diagnostic_mode = true;
  } else if (name == "logistic-convex") {
    // Separable binary data without regularization, near-IID shards, full
    // batches (batch_size exceeds every shard) and full participation.
    cfg.objective = "logistic-convex";
    cfg.problem.dimension = 5;
    cfg.problem.rows_per_client = 50;
    cfg.problem.margin = 0.5;
    cfg.problem.l2 = 0.0;
    cfg.partition.alpha = 1000.0;
    cfg.simulation = {10, 10, 1, 100, 0};
    cfg.client_algo = "armijo-sgd";
    cfg.client.batch_size = 4096;
    cfg.client.eta_l = 0.5;
    cfg.client.armijo.c = 0.5;
    cfg.client.armijo.eta_lmax = 1.0;
    cfg.diagnostic_mode = true;
  } else if (name == "tinymlp-nonconvex") {
    cfg.objective = "tinymlp-nonconvex";
    cfg.problem.dimension = 4;
    cfg.problem.num_classes = 3;
    cfg.problem.rows_per_client = 60;
    cfg.problem.hidden = 16;
    cfg.problem.l2 = 1e-4;
    cfg.partition.alpha = 0.5;
    cfg.simulation = {10, 5, 5, 200, 0};
    cfg.client_algo = "armijo-sgd";
    cfg.client.batch_size = 16;
    cfg.client.armijo.eta_lmax = 1.0;
    cfg.client.armijo.opt = 2;
    cfg.server.sync.step_size_sync = StepSizeSyncPolicy::kMaxOfClients;
  } else if (name == "counterexample") {
    // Two scalar clients with mean x³; from x = 1 they report 0.8 and 1.5.
    cfg.objective = "counterexample";
    cfg.simulation = {2, 2, 1, 1, 0};
    cfg.client_algo = "sgd";
    cfg.client.eta_l = 0.1;
    cfg.server_algo = "fedavg";
    cfg.prescribed_models = {{{0.8}, {1.5}}};
    cfg.diagnostic_mode = true;
  } else if (name == "dirichlet-skew" || name == "baseline-sweep") {
    cfg.objective = "dirichlet-skew";
    cfg.problem.dimension = 10;
    cfg.problem.num_classes = 10;
    cfg.problem.rows_per_client = 30;
    cfg.problem.separation = 3.0;
    cfg.problem.l2 = 1e-3;
    cfg.partition.alpha = 0.1;
    cfg.simulation = {100, 10, 1, 500, 0};
    cfg.client_algo = "armijo-sgd";
    cfg.client.batch_size = 32;
    cfg.client.eta_l = 1e-2;
    cfg.client.armijo.eta_lmax = 1.0;
    cfg.seeds = {0, 1, 2, 3, 4};
    if (name == "baseline-sweep") {
      cfg.simulation.rounds = 100;
      cfg.client_algo = "sgd";
      cfg.server_algo = "fedavg";
      cfg.sweep = SweepSettings{{"fedavg", "fedadam", "fedexp"},
                                {1e-2, 1e-1, 1e0},
                                {1e-1, 1e-2, 1e0},
                                {1e-3, std::pow(10.0, -2.5), 1e-2, std::pow(10.0, -1.5), 1e-1}};
    }
  } else {
    throw ConfigError("unknown preset \"" + name + "\" (available: " + join(preset_names()) + ")");
  }
  cfg.output.dir = "fedli-out/" + name;
  cfg.validate();
  return cfg;
}

namespace {

// Round-off allowance when comparing f(w_{t+1}) with f(w_t) near convergence.
constexpr double kDescentTolerance = 1e-12;

// In the convex, full-participation, full-batch Armijo regime the lemma
// inequalities involve no sampling noise and are checked round by round.
bool deterministic_descent_regime(const ExperimentConfig& cfg, const Federation& fed) {
  if (cfg.objective != "quadratic-sc" && cfg.objective != "logistic-convex" && cfg.objective != "dirichlet-skew") {
    return false;
  }
  if (cfg.server_algo != "fedli-ls" || cfg.client_algo != "armijo-sgd") return false;
  if (cfg.server.sync.step_size_sync != StepSizeSyncPolicy::kUnit) return false;
  if (cfg.simulation.sampled_per_round != cfg.simulation.total_clients) return false;
  return std::all_of(fed.clients.begin(), fed.clients.end(), [&](const ObjectivePtr& c) {
    return cfg.client.batch_size >= static_cast<std::size_t>(c->num_rows());
  });
}

std::string format_double(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

json optional_json(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const Federation fed = build_federation(cfg);
  const AlgorithmBundle algo = make_bundle(cfg);
  const SimulationResult result = run_simulation(cfg.simulation, fed, algo);

  std::filesystem::create_directories(out_dir);
  write_jsonl(out_dir / "records.jsonl", result.records);
  if (cfg.output.csv) write_csv(out_dir / "records.csv", result.records);

  RunSummary summary;
  const BoundInputs inputs = bound_inputs(fed, cfg.simulation, algo);
  const auto& recs = result.records;
  summary.invalid_regime = result.bound_invalid_regime;

  std::optional<double> fitted;
  if (fed.optimum) {
    try {
      fitted = contraction_fit(std::span<const RoundRecord>(recs));
    } catch (const InputError&) {
      fitted.reset();
    }
  }
  std::optional<double> bound_factor;
  std::optional<CFeasibility> feas;
  if (algo.bound == BoundKind::kStronglyConvex || algo.bound == BoundKind::kConvexGap) {
    if (inputs.L > 0.0 && inputs.eta_lmax > 0.0) {
      feas = c_feasibility(inputs);
      if (!(inputs.c > feas->c_min)) summary.invalid_regime = true;
    } else {
      summary.invalid_regime = true;
    }
  }
  if (algo.bound == BoundKind::kStronglyConvex) {
    bound_factor = 1.0 - inputs.eta_g * inputs.eta_lmax * inputs.mu * inputs.K;
    bool within = true;
    std::size_t first_violation = 0;
    for (const RoundRecord& r : recs) {
      if (r.dist_sq && r.bound && !(*r.dist_sq <= *r.bound * 1.05)) {
        if (within) first_violation = r.round;
        within = false;
      }
    }
    summary.checks.push_back({"strongly_convex_bound", within,
                              within ? "dist_sq <= 1.05 * bound in every round"
                                     : "first violation in round " + std::to_string(first_violation)});
    if (fitted) {
      const bool ok = *fitted <= *bound_factor + 0.02;
      summary.checks.push_back({"contraction_factor", ok,
                                "fitted " + format_double(*fitted) + " vs bound factor " +
                                    format_double(*bound_factor) + " + 0.02"});
    }
  }
  if (algo.bound == BoundKind::kNonconvex && algo.diagnostic_mode && !recs.empty() && recs.back().bound) {
    double min_grad = std::numeric_limits<double>::infinity();
    for (const RoundRecord& r : recs) {
      if (r.diagnostics) min_grad = std::min(min_grad, r.diagnostics->global_grad_sq);
    }
    const bool ok = min_grad <= *recs.back().bound;
    summary.checks.push_back({"nonconvex_bound", ok,
                              "min gradient norm^2 " + format_double(min_grad) + " vs bound " +
                                  format_double(*recs.back().bound)});
  }

  std::optional<bool> ascent;
  if (algo.diagnostic_mode) {
    ascent = false;
    for (const RoundRecord& r : recs) {
      if (r.diagnostics &&
          r.diagnostics->full_loss_after > r.diagnostics->full_loss_before + kDescentTolerance) {
        ascent = true;
      }
    }
  }
  if (algo.diagnostic_mode && deterministic_descent_regime(cfg, fed)) {
    std::size_t descent_fail = 0, moment_fail = 0, drift_fail = 0;
    for (const RoundRecord& r : recs) {
      if (!r.diagnostics) continue;
      const RoundDiagnostics& d = *r.diagnostics;
      if (d.full_loss_after > d.full_loss_before + kDescentTolerance) ++descent_fail;
      if (d.second_moment_lhs && !(*d.second_moment_lhs <= *d.second_moment_rhs * (1.0 + 1e-9) + 1e-15)) {
        ++moment_fail;
      }
      if (d.drift_lhs && !(*d.drift_lhs <= *d.drift_rhs * (1.0 + 1e-9) + 1e-12)) ++drift_fail;
    }
    summary.checks.push_back({"global_descent", descent_fail == 0, std::to_string(descent_fail) + " violations"});
    summary.checks.push_back({"second_moment_bound", moment_fail == 0, std::to_string(moment_fail) + " violations"});
    summary.checks.push_back({"drift_bound", drift_fail == 0, std::to_string(drift_fail) + " violations"});
  }

  nlohmann::ordered_json& j = summary.json;
  j["preset"] = cfg.preset;
  j["objective"] = cfg.objective;
  j["server_algo"] = cfg.server_algo;
  j["client_algo"] = cfg.client_algo;
  j["seed"] = cfg.simulation.seed;
  j["rounds_completed"] = recs.size();
  j["stopped_early"] = result.stopped_early;
  j["stop_reason"] = result.stop_reason;
  j["final_train_loss"] = recs.empty() ? json(nullptr) : optional_json(recs.back().train_loss);
  j["final_test_acc"] = recs.empty() ? json(nullptr) : optional_json(recs.back().test_accuracy);
  j["final_dist_sq"] = recs.empty() ? json(nullptr) : optional_json(recs.back().dist_sq);
  j["contraction_factor"] = optional_json(fitted);
  j["bound_factor"] = optional_json(bound_factor);
  if (feas) {
    j["c_min"] = feas->c_min;
    j["c_feasible"] = inputs.c > feas->c_min;
  }
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  bool all_passed = true;
  for (const BoundCheck& c : summary.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    all_passed = all_passed && c.passed;
  }
  j["bound_checks"] = checks;
  j["invalid_regime"] = summary.invalid_regime;
  j["negative_bound"] = result.bound_negative;
  j["global_ascent_detected"] = ascent ? json(*ascent) : json(nullptr);

  if (result.numeric_failure) {
    summary.exit_code = kExitFailure;
  } else if (summary.invalid_regime || !all_passed) {
    summary.exit_code = kExitRegimeFlag;
  }
  j["exit_code"] = summary.exit_code;

  std::ofstream f(out_dir / "summary.json");
  if (!f) throw InputError("cannot write " + (out_dir / "summary.json").string());
  f << j.dump(2) << '\n';
  if (!f) throw InputError("failed writing " + (out_dir / "summary.json").string());
  return summary;
}

int run_command(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log,
                std::ostream& err) {
  try {
    const RunSummary s = run_experiment(cfg, out_dir);
    log << "wrote " << (out_dir / "records.jsonl").string() << " and summary.json ("
        << s.json["rounds_completed"].get<std::size_t>() << " rounds)\n";
    for (const BoundCheck& c : s.checks) {
      log << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    }
    if (s.invalid_regime) log << "invalid-regime flag raised\n";
    if (s.exit_code == kExitFailure) err << "run aborted: " << s.json["stop_reason"].get<std::string>() << '\n';
    return s.exit_code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

namespace {

struct SweepCell {
  std::string algo;
  double eta_l = 0.0;
  std::optional<double> eta_g;
  std::optional<double> epsilon;
};

std::vector<SweepCell> expand_grid(const SweepSettings& sw) {
  std::vector<SweepCell> cells;
  for (const std::string& algo : sw.server_algos) {
    for (double eta_l : sw.eta_l) {
      if (algo == "fedexp") {
        const std::vector<double> eps = sw.fedexp_epsilon.empty() ? std::vector<double>{1e-3} : sw.fedexp_epsilon;
        for (double e : eps) cells.push_back({algo, eta_l, std::nullopt, e});
      } else if (algo == "fedli-ls" || algo == "fedli-lu" || sw.eta_g.empty()) {
        cells.push_back({algo, eta_l, std::nullopt, std::nullopt});
      } else {
        for (double g : sw.eta_g) cells.push_back({algo, eta_l, g, std::nullopt});
      }
    }
  }
  return cells;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0};
}

std::string csv_field(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

int sweep_command(const ExperimentConfig& base, const std::filesystem::path& out_dir, std::ostream& log,
                  std::ostream& err) {
  try {
    base.validate();
    if (!base.sweep) throw ConfigError("config has no sweep grid");
    const std::vector<std::uint64_t> seeds =
        base.seeds.empty() ? std::vector<std::uint64_t>{base.simulation.seed} : base.seeds;
    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir / "sweep.csv");
    if (!csv) throw InputError("cannot write " + (out_dir / "sweep.csv").string());
    csv << "server_algo,eta_l,eta_g,fedexp_epsilon,seeds,diverged,final_loss_mean,final_loss_std,"
           "final_acc_mean,final_acc_std\n";
    for (const SweepCell& cell : expand_grid(*base.sweep)) {
      std::vector<double> losses, accs;
      std::size_t diverged = 0;
      for (std::uint64_t seed : seeds) {
        ExperimentConfig cfg = base;
        cfg.sweep.reset();
        cfg.server_algo = cell.algo;
        cfg.client_algo = cell.algo == "fedli-ls" || cell.algo == "fedli-lu" ? "armijo-sgd" : "sgd";
        cfg.client.eta_l = cell.eta_l;
        if (cfg.client_algo == "armijo-sgd") cfg.client.armijo.eta_lmax = cell.eta_l;
        if (cell.eta_g) {
          cfg.server.eta_g = *cell.eta_g;
          cfg.server.fedadam.eta_g = *cell.eta_g;
        }
        if (cell.epsilon) cfg.server.fedexp_epsilon = *cell.epsilon;
        cfg.simulation.seed = seed;
        const Federation fed = build_federation(cfg);
        const SimulationResult r = run_simulation(cfg.simulation, fed, make_bundle(cfg));
        if (r.stopped_early || r.records.empty()) {
          ++diverged;
          continue;
        }
        losses.push_back(r.records.back().train_loss);
        if (r.records.back().test_accuracy) accs.push_back(*r.records.back().test_accuracy);
      }
      const auto [lm, ls] = mean_std(losses);
      const auto [am, as] = mean_std(accs);
      csv << cell.algo << ',' << csv_field(cell.eta_l) << ',' << csv_field(cell.eta_g) << ','
          << csv_field(cell.epsilon) << ',' << seeds.size() << ',' << diverged << ',' << csv_field(lm) << ','
          << csv_field(ls) << ',' << csv_field(am) << ',' << csv_field(as) << '\n';
      log << cell.algo << " eta_l=" << cell.eta_l;
      if (cell.eta_g) log << " eta_g=" << *cell.eta_g;
      if (cell.epsilon) log << " eps=" << *cell.epsilon;
      log << " loss=" << lm << " +- " << ls << " acc=" << am << " +- " << as;
      if (diverged) log << " (" << diverged << " diverged)";
      log << '\n';
    }
    if (!csv) throw InputError("failed writing sweep.csv");
    log << "wrote " << (out_dir / "sweep.csv").string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace fedli
