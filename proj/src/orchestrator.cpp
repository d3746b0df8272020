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

#include "fedli/orchestrator.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "fedli/partition.hpp"
#include "fedli/rng.hpp"

namespace fedli {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double local_eta_max(const LocalConfig& cfg) {
  if (const auto* a = std::get_if<ArmijoSgd>(&cfg.algorithm)) return a->config.eta_lmax;
  return std::get<PlainSgd>(cfg.algorithm).eta_l;
}

std::optional<double> armijo_c(const LocalConfig& cfg) {
  if (const auto* a = std::get_if<ArmijoSgd>(&cfg.algorithm)) return a->config.c;
  return std::nullopt;
}

double nominal_server_step(const ServerAlgorithm& algo) {
  return std::visit(Overloaded{
                        [](const FedLiLs&) { return 1.0; },
                        [](const FedLiLu& a) { return a.dfw.proximal_eta; },
                        [](const FedAvg& a) { return a.eta_g; },
                        [](const FedProx& a) { return a.eta_g; },
                        [](const Scaffold& a) { return a.eta_g; },
                        [](const FedAdam& a) { return a.adam.eta_g; },
                        [](const FedExp&) { return 1.0; },
                    },
                    algo);
}

struct ClientJob {
  ClientId id = 0;
  std::size_t position = 0;
};

// Runs fn(job) for every job on up to `workers` threads. Results land at the
// job's position, so the outcome does not depend on scheduling.
template <typename Result, typename Fn>
std::vector<Result> run_parallel(const std::vector<ClientJob>& jobs, std::size_t workers, Fn fn) {
  std::vector<Result> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  auto body = [&](std::size_t i) {
    try {
      results[i] = fn(jobs[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  workers = std::min(workers, jobs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) body(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) body(i);
      });
    }
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw ProtocolError("client " + std::to_string(jobs[i].id) +
                          " failed, round aborted: " + e.what());
    }
  }
  return results;
}

ClientReturn to_return(ClientId id, const Objective& oracle, const LocalRunResult& r) {
  ClientReturn out;
  out.client_id = id;
  out.model = r.final_model;
  out.last_step_size = r.last_step_size;
  out.objective_value = r.objective_value;
  out.shard_size = static_cast<std::size_t>(oracle.num_rows());
  return out;
}

double mean_reported_loss(std::span<const ClientReturn> returns) {
  double sum = 0.0;
  for (const ClientReturn& r : returns) sum += r.objective_value;
  return sum / static_cast<double>(returns.size());
}

}  // namespace

std::string algorithm_name(const ServerAlgorithm& algo) {
  return std::visit(Overloaded{
                        [](const FedLiLs&) { return std::string("fedli-ls"); },
                        [](const FedLiLu&) { return std::string("fedli-lu"); },
                        [](const FedAvg&) { return std::string("fedavg"); },
                        [](const FedProx&) { return std::string("fedprox"); },
                        [](const Scaffold&) { return std::string("scaffold"); },
                        [](const FedAdam&) { return std::string("fedadam"); },
                        [](const FedExp&) { return std::string("fedexp"); },
                    },
                    algo);
}

double Federation::global_value(const ParamVector& w) const {
  if (clients.empty()) throw ConfigError("federation has no clients");
  double sum = 0.0;
  for (const ObjectivePtr& c : clients) sum += evaluate(*c, w, Batch::full(c->num_rows()));
  return sum / static_cast<double>(clients.size());
}

ParamVector Federation::global_gradient(const ParamVector& w) const {
  if (clients.empty()) throw ConfigError("federation has no clients");
  ParamVector sum = ParamVector::Zero(w.size());
  for (const ObjectivePtr& c : clients) sum += stochastic_gradient(*c, w, Batch::full(c->num_rows()));
  return sum / static_cast<double>(clients.size());
}

std::optional<double> Federation::test_accuracy(const ParamVector& w) const {
  if (!test_set || clients.empty()) return std::nullopt;
  return clients.front()->accuracy(w, *test_set);
}

void Federation::validate() const {
  if (clients.empty()) throw ConfigError("federation has no clients");
  const Index d = clients.front()->dimension();
  for (const ObjectivePtr& c : clients) {
    if (!c) throw ConfigError("federation has a null client objective");
    if (c->dimension() != d) throw ConfigError("client objectives disagree on dimension");
    if (c->num_rows() < 1) throw ConfigError("client shard is empty");
  }
  if (initial_model.size() != d) throw ConfigError("initial model has the wrong dimension");
  if (optimum && optimum->size() != d) throw ConfigError("optimum has the wrong dimension");
  constants.validate();
}

BoundInputs bound_inputs(const Federation& fed, const SimulationConfig& sim,
                         const AlgorithmBundle& algo) {
  BoundInputs in;
  in.eta_g = nominal_server_step(algo.server);
  in.eta_lmax = local_eta_max(algo.local);
  in.mu = fed.constants.strong_convexity_mu;
  in.L = fed.constants.smoothness_L;
  in.K = static_cast<double>(sim.local_steps);
  in.rho = sim.participation();
  in.c = armijo_c(algo.local).value_or(0.5);
  in.G = fed.constants.variance_G;
  in.beta_lipschitz = fed.constants.lipschitz_beta;
  in.d0_sq = fed.optimum ? (fed.initial_model - *fed.optimum).squaredNorm() : 0.0;
  return in;
}

std::size_t client_thread_cap() {
  if (const char* env = std::getenv("FEDLI_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

ServerState initial_state(const Federation& fed) {
  ServerState s;
  s.global_model = fed.initial_model;
  return s;
}

RoundOutcome run_round(const ServerState& state, const SimulationConfig& sim,
                       const Federation& fed, const AlgorithmBundle& algo) {
  sim.validate();
  if (fed.size() != sim.total_clients) {
    throw ConfigError("federation has " + std::to_string(fed.size()) + " clients but N = " +
                      std::to_string(sim.total_clients));
  }
  require_finite(state.global_model, "global model");
  const ParamVector& w_t = state.global_model;
  const int K = static_cast<int>(sim.local_steps);
  const std::size_t t = state.round_index;
  const std::vector<ClientId> sampled =
      sample_clients(sim.total_clients, sim.sampled_per_round, t, sim.seed);

  RoundOutcome out;
  RoundRecord& rec = out.record;
  rec.round = t;

  LocalConfig local = algo.local;
  local.record_diagnostics = local.record_diagnostics || algo.diagnostic_mode;
  std::vector<LocalRunResult> local_runs;
  ParamVector delta;

  if (const auto* sc = std::get_if<Scaffold>(&algo.server)) {
    const auto* sgd = std::get_if<PlainSgd>(&algo.local.algorithm);
    if (!sgd) throw ConfigError("scaffold requires plain sgd clients");
    if (!algo.prescribed_models.empty()) throw ConfigError("scaffold does not take prescribed models");
    ScaffoldConfig cfg{sgd->eta_l, sc->eta_g, algo.local.batch_size};
    ScaffoldRound r = scaffold_round(state, sampled, fed.clients, K, cfg, sim.seed);
    out.state = std::move(r.state);
    out.returns = std::move(r.returns);
    delta = std::move(r.aggregate_delta);
    rec.eta_g = sc->eta_g;
  } else {
    std::vector<ClientJob> jobs;
    for (std::size_t j = 0; j < sampled.size(); ++j) jobs.push_back({sampled[j], j});

    if (t < algo.prescribed_models.size()) {
      const auto& models = algo.prescribed_models[t];
      if (models.size() != sampled.size()) {
        throw ConfigError("prescribed models for round " + std::to_string(t) +
                          " do not match the number of sampled clients");
      }
      for (const ClientJob& job : jobs) {
        const Objective& oracle = *fed.clients[job.id];
        LocalRunResult r;
        r.final_model = models[job.position];
        require_finite(r.final_model, "prescribed model");
        if (r.final_model.size() != w_t.size()) throw ConfigError("prescribed model has the wrong dimension");
        r.objective_value = evaluate(oracle, r.final_model, Batch::full(oracle.num_rows()));
        local_runs.push_back(std::move(r));
      }
    } else {
      const FedProx* prox = std::get_if<FedProx>(&algo.server);
      local_runs = run_parallel<LocalRunResult>(jobs, client_thread_cap(), [&](const ClientJob& job) {
        const Objective& base = *fed.clients[job.id];
        RngStream rng(sim.seed, t, StreamPurpose::kBatchSampling, job.id);
        if (prox) {
          const ProximalObjective proximal(base, w_t, prox->mu_prox);
          return client_update(proximal, w_t, K, local, rng);
        }
        return client_update(base, w_t, K, local, rng);
      });
    }
    for (const ClientJob& job : jobs) {
      out.returns.push_back(to_return(job.id, *fed.clients[job.id], local_runs[job.position]));
    }

    const PseudoGradient pg = make_pseudo_gradient(w_t, out.returns);
    delta = pg.aggregate;
    out.state = state;
    std::visit(Overloaded{
                   [&](const FedLiLs& a) {
                     rec.eta_g = step_size_sync(out.returns, a.sync);
                     out.state.global_model = server_update_gd(w_t, delta, rec.eta_g);
                   },
                   [&](const FedLiLu& a) {
                     const double f_g = function_sync(out.returns, a.sync);
                     const DfwStep step = server_update_dfw(w_t, delta, f_g, a.dfw);
                     rec.eta_g = a.dfw.proximal_eta;
                     rec.gamma = step.gamma;
                     out.state.global_model = step.next;
                   },
                   [&](const FedAvg& a) {
                     rec.eta_g = a.eta_g;
                     out.state.global_model = server_update_gd(w_t, delta, a.eta_g);
                   },
                   [&](const FedProx& a) {
                     rec.eta_g = a.eta_g;
                     out.state.global_model = server_update_gd(w_t, delta, a.eta_g);
                   },
                   [&](const Scaffold&) {},
                   [&](const FedAdam& a) {
                     out.state = server_update_fedadam(state, delta, a.adam);
                     rec.eta_g = a.adam.eta_g;
                   },
                   [&](const FedExp& a) {
                     std::vector<ParamVector> deltas;
                     for (const auto& [id, d] : pg.per_client) deltas.push_back(d);
                     const FedExpStep step = server_update_fedexp(w_t, deltas, a.epsilon);
                     rec.eta_g = step.eta_g;
                     out.state.global_model = step.next;
                   },
               },
               algo.server);
  }
  out.state.round_index = t + 1;
  const ParamVector& w_next = out.state.global_model;

  rec.train_loss = mean_reported_loss(out.returns);
  rec.delta_norm = delta.norm();
  if (w_next.allFinite()) {
    rec.test_accuracy = fed.test_accuracy(w_next);
    if (fed.optimum) rec.dist_sq = (w_next - *fed.optimum).squaredNorm();
  }

  if (algo.diagnostic_mode && w_next.allFinite()) {
    RoundDiagnostics diag;
    diag.full_loss_before = fed.global_value(w_t);
    diag.full_loss_after = fed.global_value(w_next);
    diag.global_grad_sq = fed.global_gradient(w_t).squaredNorm();
    const double eta = local_eta_max(algo.local);
    const double k = static_cast<double>(K);
    const double s = static_cast<double>(out.returns.size());
    const bool instrumented =
        local_runs.size() == out.returns.size() &&
        std::all_of(local_runs.begin(), local_runs.end(),
                    [&](const LocalRunResult& r) { return r.full_gradient_sq_norms.size() == sim.local_steps; });
    if (instrumented) {
      double grad_sum = 0.0;
      bool full_batch = true;
      for (std::size_t j = 0; j < local_runs.size(); ++j) {
        for (double g : local_runs[j].full_gradient_sq_norms) grad_sum += g;
        const auto rows = static_cast<std::size_t>(fed.clients[out.returns[j].client_id]->num_rows());
        full_batch = full_batch && algo.local.batch_size >= rows;
      }
      const double g_est = full_batch ? 0.0 : fed.constants.variance_G;
      diag.second_moment_lhs = delta.squaredNorm();
      diag.second_moment_rhs = eta * eta * k / s * grad_sum + eta * eta * k * k * g_est;
    }
    if (const auto c = armijo_c(algo.local)) {
      double drift = 0.0;
      for (const ClientReturn& r : out.returns) drift += (w_t - r.model).squaredNorm();
      diag.drift_lhs = k * drift;
      diag.drift_rhs = eta * static_cast<double>(sim.total_clients) * k * k / *c *
                       (diag.full_loss_before - diag.full_loss_after);
    }
    rec.diagnostics = diag;
  }
  return out;
}

SimulationResult run_simulation(const SimulationConfig& sim, const Federation& fed,
                                const AlgorithmBundle& algo, const StopRules& stop) {
  sim.validate();
  fed.validate();
  SimulationResult result;
  ServerState state = initial_state(fed);
  const BoundInputs inputs = bound_inputs(fed, sim, algo);
  std::optional<double> f0;
  if (algo.bound == BoundKind::kNonconvex) f0 = fed.global_value(fed.initial_model);

  for (std::size_t t = 0; t < sim.rounds; ++t) {
    RoundOutcome outcome = run_round(state, sim, fed, algo);
    if (!outcome.state.global_model.allFinite()) {
      result.stopped_early = true;
      result.numeric_failure = true;
      result.stop_reason = "non-finite global model in round " + std::to_string(t) +
                           "; last valid record index " +
                           (t == 0 ? std::string("none") : std::to_string(t - 1));
      break;
    }
    RoundRecord& rec = outcome.record;
    std::optional<BoundValue> bv;
    switch (algo.bound) {
      case BoundKind::kNone:
        break;
      case BoundKind::kStronglyConvex:
        bv = strongly_convex_bound(inputs, t);
        break;
      case BoundKind::kConvexGap:
        bv = convex_gap_bound(inputs, t + 1);
        break;
      case BoundKind::kNonconvex: {
        const double ft = rec.diagnostics ? rec.diagnostics->full_loss_after
                                          : fed.global_value(outcome.state.global_model);
        bv = nonconvex_bound(inputs, t + 1, *f0 - ft);
        break;
      }
    }
    if (bv) {
      rec.bound = bv->value;
      result.bound_invalid_regime = result.bound_invalid_regime || bv->invalid_regime;
      result.bound_negative = result.bound_negative || bv->negative;
    }
    state = outcome.state;
    result.records.push_back(std::move(rec));

    const RoundRecord& last = result.records.back();
    const double watched = last.diagnostics ? last.diagnostics->full_loss_after : last.train_loss;
    if (!std::isfinite(last.train_loss) || !std::isfinite(watched) || watched > stop.max_loss ||
        last.train_loss > stop.max_loss) {
      result.stopped_early = true;
      result.stop_reason = "loss diverged in round " + std::to_string(t);
      break;
    }
  }
  result.final_state = std::move(state);
  return result;
}

double contraction_fit(std::span<const RoundRecord> records) {
  std::vector<double> values;
  values.reserve(records.size());
  for (const RoundRecord& r : records) values.push_back(r.dist_sq.value_or(0.0));
  return contraction_fit(std::span<const double>(values));
}

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

nlohmann::ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

void write_jsonl(std::ostream& out, std::span<const RoundRecord> records) {
  for (const RoundRecord& r : records) {
    nlohmann::ordered_json j;
    j["round"] = r.round;
    j["train_loss"] = number(r.train_loss);
    j["test_acc"] = optional_number(r.test_accuracy);
    j["eta_g"] = number(r.eta_g);
    j["gamma"] = optional_number(r.gamma);
    j["delta_norm"] = number(r.delta_norm);
    j["dist_sq"] = optional_number(r.dist_sq);
    j["bound"] = optional_number(r.bound);
    out << j.dump() << '\n';
  }
}

void write_csv(std::ostream& out, std::span<const RoundRecord> records) {
  out << "round,train_loss,test_acc,eta_g,gamma,delta_norm,dist_sq,bound\n";
  for (const RoundRecord& r : records) {
    out << r.round << ',' << csv_number(r.train_loss) << ',' << csv_number(r.test_accuracy) << ','
        << csv_number(r.eta_g) << ',' << csv_number(r.gamma) << ',' << csv_number(r.delta_norm)
        << ',' << csv_number(r.dist_sq) << ',' << csv_number(r.bound) << '\n';
  }
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string() + " for writing");
  return f;
}

}  // namespace

void write_jsonl(const std::filesystem::path& path, std::span<const RoundRecord> records) {
  std::ofstream f = open_for_write(path);
  write_jsonl(f, records);
  if (!f) throw InputError("failed writing " + path.string());
}

void write_csv(const std::filesystem::path& path, std::span<const RoundRecord> records) {
  std::ofstream f = open_for_write(path);
  write_csv(f, records);
  if (!f) throw InputError("failed writing " + path.string());
}

}  // namespace fedli
