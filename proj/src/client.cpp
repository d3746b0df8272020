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

#include "fedli/client.hpp"

#include <algorithm>
#include <cmath>

namespace fedli {

void ArmijoConfig::validate() const {
  if (!(c > 0.0 && c < 1.0)) throw ConfigError("armijo c out of (0,1)");
  if (!(beta_back > 0.0 && beta_back < 1.0)) throw ConfigError("armijo beta_back out of (0,1)");
  if (!(delta > 0.0)) throw ConfigError("armijo delta must be positive");
  if (!(min_step > 0.0)) throw ConfigError("armijo min_step must be positive");
  if (!(eta_lmax >= min_step)) throw ConfigError("armijo eta_lmax must be at least min_step");
  if (opt < 0 || opt > 2) throw ConfigError("armijo opt must be 0, 1 or 2");
  if (max_backtracks < 1) throw ConfigError("armijo max_backtracks must be positive");
}

ArmijoResult armijo_search(const Objective& oracle, const ParamVector& w,
                           const Batch& batch, const ArmijoConfig& cfg,
                           double eta_start) {
  if (!(eta_start > 0.0 && eta_start <= cfg.eta_lmax)) {
    throw ConfigError("armijo eta_start outside (0, eta_lmax]");
  }
  const ValueAndGradient at_w = evaluate_with_gradient(oracle, w, batch);
  const double g_sq = at_w.gradient.squaredNorm();
  if (g_sq == 0.0) return {cfg.eta_lmax, w, 0, false};

  double eta = eta_start;
  for (int backtracks = 0;; ++backtracks) {
    if (backtracks > cfg.max_backtracks || eta < cfg.min_step) {
      return {cfg.min_step, sgd_step(w, at_w.gradient, cfg.min_step), backtracks, true};
    }
    ParamVector trial = sgd_step(w, at_w.gradient, eta);
    const double f_trial = oracle.value(trial, batch.rows);
    // A non-finite trial value compares false and forces a backtrack.
    if (f_trial <= at_w.value - cfg.c * eta * g_sq) {
      return {eta, std::move(trial), backtracks, false};
    }
    eta *= cfg.beta_back;
  }
}

double reset_step_size(double eta_prev, const ArmijoConfig& cfg, std::size_t batch_size,
                       std::size_t shard_size, int step_index) {
  if (step_index < 1) throw ConfigError("reset step index is 1-based");
  if (step_index == 1) return cfg.eta_lmax;
  double eta = eta_prev;
  switch (cfg.opt) {
    case 0:
      break;
    case 1:
      eta = cfg.eta_lmax;
      break;
    case 2: {
      const double ratio = static_cast<double>(batch_size) /
                           static_cast<double>(std::max<std::size_t>(shard_size, 1));
      eta = cfg.reset_scaling == ResetScaling::kExponent ? eta_prev * std::pow(cfg.delta, ratio)
                                                         : eta_prev * cfg.delta * ratio;
      break;
    }
    default:
      throw ConfigError("armijo opt must be 0, 1 or 2");
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) return cfg.eta_lmax;
  return std::min(eta, cfg.eta_lmax);
}

EpochBatchSampler::EpochBatchSampler(Index num_rows, std::size_t batch_size, RngStream rng)
    : num_rows_(num_rows), batch_size_(batch_size), rng_(rng) {
  if (num_rows_ < 1) throw InputError("cannot sample batches from an empty shard");
  if (batch_size_ == 0) throw ConfigError("batch size must be positive");
}

Batch EpochBatchSampler::next() {
  if (static_cast<Index>(batch_size_) >= num_rows_) return Batch::full(num_rows_);
  if (order_.empty() || cursor_ + batch_size_ > order_.size()) {
    order_.resize(static_cast<std::size_t>(num_rows_));
    for (Index r = 0; r < num_rows_; ++r) order_[static_cast<std::size_t>(r)] = r;
    shuffle(order_, rng_);
    cursor_ = 0;
  }
  Batch b;
  b.rows.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_size_));
  std::sort(b.rows.begin(), b.rows.end());
  cursor_ += batch_size_;
  return b;
}

LocalRunResult client_update(const Objective& oracle, const ParamVector& w0, int local_steps,
                             const LocalConfig& cfg, RngStream rng) {
  if (local_steps < 1) throw ConfigError("local steps K must be at least 1");
  if (w0.size() != oracle.dimension()) throw ConfigError("client_update: model dimension mismatch");
  if (const auto* armijo = std::get_if<ArmijoSgd>(&cfg.algorithm)) armijo->config.validate();
  if (const auto* sgd = std::get_if<PlainSgd>(&cfg.algorithm); sgd && !(sgd->eta_l >= 0.0)) {
    throw ConfigError("local step size must be nonnegative");
  }

  const Batch full = Batch::full(oracle.num_rows());
  EpochBatchSampler sampler(oracle.num_rows(), cfg.batch_size, rng);
  LocalRunResult out;
  out.final_model = w0;
  if (cfg.record_diagnostics) out.full_objective_trace.push_back(oracle.value(w0, full.rows));
  double eta = 0.0;
  Batch batch;
  for (int k = 1; k <= local_steps; ++k) {
    batch = sampler.next();
    if (cfg.record_diagnostics) {
      out.full_gradient_sq_norms.push_back(
          oracle.value_and_gradient(out.final_model, full.rows).gradient.squaredNorm());
    }
    if (const auto* sgd = std::get_if<PlainSgd>(&cfg.algorithm)) {
      const ParamVector g = stochastic_gradient(oracle, out.final_model, batch);
      out.final_model = sgd_step(out.final_model, g, sgd->eta_l);
      eta = sgd->eta_l;
    } else {
      const ArmijoConfig& ac = std::get<ArmijoSgd>(cfg.algorithm).config;
      const double start = reset_step_size(eta, ac, cfg.batch_size,
                                           static_cast<std::size_t>(oracle.num_rows()), k);
      ArmijoResult r = armijo_search(oracle, out.final_model, batch, ac, start);
      out.total_backtracks += r.backtracks;
      out.floor_hits += r.floor_hit ? 1 : 0;
      out.final_model = std::move(r.next);
      eta = r.step_size;
    }
    out.accepted_step_sizes.push_back(eta);
    ++out.steps_taken;
    require_finite(out.final_model, "local model");
    if (cfg.record_diagnostics) out.full_objective_trace.push_back(oracle.value(out.final_model, full.rows));
  }
  out.last_step_size = eta;
  out.objective_value = cfg.objective_eval == ObjectiveEval::kFullShard
                            ? oracle.value(out.final_model, full.rows)
                            : oracle.value(out.final_model, batch.rows);
  return out;
}

}  // namespace fedli
