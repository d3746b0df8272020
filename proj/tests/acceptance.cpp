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

// Acceptance suite: one PASS/FAIL line per criterion A1..A12.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fedli/config.hpp"
#include "fedli/partition.hpp"
#include "fedli/problems.hpp"
#include "oracles.hpp"

namespace {

using namespace fedli;
using Clock = std::chrono::steady_clock;

int g_failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ParamVector random_point(Index d, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> n(0, scale);
  ParamVector w(d);
  for (Index j = 0; j < d; ++j) w(j) = n(gen);
  return w;
}

DatasetShard random_shard(Index rows, Index cols, int classes, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0, 1);
  DatasetShard s;
  s.features.resize(rows, cols);
  s.labels.resize(rows);
  s.num_classes = classes;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) s.features(i, j) = n(gen);
    s.labels(i) = static_cast<int>(i % classes);
  }
  return s;
}

// Rows of ½(w − b)ᵀA(w − b) with λ_max(A) = l exactly.
std::vector<QuadraticTerm> terms_with_smoothness(int m, Index d, double l, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<QuadraticTerm> terms;
  for (int i = 0; i < m; ++i) {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(
        Eigen::MatrixXd::NullaryExpr(d, d, [&] { return std::normal_distribution<double>(0, 1)(gen); }));
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd eig(d);
    for (Index j = 0; j < d; ++j) eig(j) = l * u(gen);
    eig(0) = l;
    terms.push_back({q * eig.asDiagonal() * q.transpose(), random_point(d, gen)});
  }
  return terms;
}

void a1() {
  const auto start = Clock::now();
  const ExperimentConfig cfg = preset("quadratic-sc");
  const Federation fed = build_federation(cfg);
  const AlgorithmBundle algo = make_bundle(cfg);
  const BoundInputs in = bound_inputs(fed, cfg.simulation, algo);
  const CFeasibility feas = c_feasibility(in);
  const SimulationResult r = run_simulation(cfg.simulation, fed, algo);
  const double factor = 1.0 - in.eta_g * in.eta_lmax * in.mu * in.K;
  const double fit = contraction_fit(r.records);
  int violations = 0;
  for (const RoundRecord& rec : r.records) {
    const double bound = strongly_convex_bound(in, rec.round).value;
    if (!rec.dist_sq || *rec.dist_sq > 1.05 * bound) ++violations;
  }
  const double secs = seconds_since(start);
  const bool pass = r.records.size() == 200 && fit <= factor + 0.02 && violations == 0 &&
                    cfg.client.armijo.c > feas.c_min && feas.feasible && secs < 5.0;
  std::ostringstream d;
  d << "fit=" << fit << " factor=" << factor << " c=" << cfg.client.armijo.c << " c_min=" << feas.c_min
    << " bound_violations=" << violations << " time=" << fmt("%.2fs", secs);
  report("A1", pass, d.str());
}

// One logistic-convex run shared by A2 and A10.
struct LogisticRun {
  SimulationResult result;
  double seconds = 0.0;
};

LogisticRun logistic_run() {
  const auto start = Clock::now();
  const ExperimentConfig cfg = preset("logistic-convex");
  const Federation fed = build_federation(cfg);
  LogisticRun out;
  out.result = run_simulation(cfg.simulation, fed, make_bundle(cfg));
  out.seconds = seconds_since(start);
  return out;
}

void a2(const LogisticRun& run) {
  int ascents = 0;
  int strict = 0;
  for (const RoundRecord& rec : run.result.records) {
    const RoundDiagnostics& d = *rec.diagnostics;
    if (d.full_loss_after > d.full_loss_before + 1e-12) ++ascents;
    if (rec.delta_norm > 1e-8 && d.full_loss_after < d.full_loss_before) ++strict;
  }
  const bool pass = run.result.records.size() == 100 && ascents == 0 && strict >= 95 && run.seconds < 10.0;
  std::ostringstream d;
  d << "ascents=" << ascents << " strict_decreases=" << strict << "/100 time=" << fmt("%.2fs", run.seconds);
  report("A2", pass, d.str());
}

void a3() {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> row(0, 3);
  const std::vector<double> ls{0.5, 1.0, 4.0, 16.0};
  const std::vector<double> cs{0.1, 0.5, 0.9};
  int accepted = 0;
  int violations = 0;
  int floors = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (double l : ls) {
    for (double c : cs) {
      ArmijoConfig cfg;
      cfg.c = c;
      cfg.beta_back = 0.5;
      cfg.eta_lmax = 1.0;
      const QuadraticObjective q(terms_with_smoothness(4, 3, l, gen));
      const double floor_step = cfg.beta_back * std::min(2.0 * (1.0 - c) / l, cfg.eta_lmax);
      int done = 0;
      while (done < 834) {
        const ParamVector w = random_point(3, gen, 3.0);
        const Batch b{{static_cast<Index>(row(gen))}};
        const ArmijoResult r = armijo_search(q, w, b, cfg, cfg.eta_lmax);
        if (r.floor_hit) ++floors;
        if (r.backtracks == 0 && r.step_size == cfg.eta_lmax && r.next == w) continue;  // zero gradient
        ++done;
        ++accepted;
        if (r.step_size < floor_step) ++violations;
        worst_ratio = std::min(worst_ratio, r.step_size / floor_step);
      }
    }
  }
  std::ostringstream d;
  d << "accepted=" << accepted << " violations=" << violations << " floor_hits=" << floors
    << " min_step/lower_bound=" << worst_ratio;
  report("A3", accepted >= 10000 && violations == 0 && floors == 0, d.str());
}

void a4() {
  const ExperimentConfig cfg = preset("counterexample");
  const Federation fed = build_federation(cfg);
  const SimulationResult r = run_simulation(cfg.simulation, fed, make_bundle(cfg));
  const double x1 = r.final_state.global_model(0);
  const double f0 = fed.global_value(fed.initial_model);
  const double f1 = fed.global_value(r.final_state.global_model);
  // Local objectives at the injected results, each below its value at x_0.
  const Batch one = Batch::full(1);
  const bool local_descent =
      fed.clients[0]->value(ParamVector::Constant(1, 0.8), one.rows) < fed.clients[0]->value(fed.initial_model, one.rows) &&
      fed.clients[1]->value(ParamVector::Constant(1, 1.5), one.rows) < fed.clients[1]->value(fed.initial_model, one.rows);
  const bool pass = std::abs(x1 - 1.15) <= 1e-12 && std::abs(f1 - 1.520875) <= 1e-12 && f0 == 1.0 &&
                    f1 > f0 && local_descent;
  std::ostringstream d;
  d.precision(17);
  d << "x1=" << x1 << " f(x1)=" << f1 << " f(x0)=" << f0 << " local_descent=" << local_descent;
  report("A4", pass, d.str());
}

void a5() {
  std::mt19937_64 gen(55);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> n(0, 2);
  double err_gd = 0.0, err_dfw = 0.0;
  int gamma_violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Index d = 1 + trial % 6;
    const ParamVector w = random_point(d, gen, 2.0);
    std::vector<ClientReturn> returns;
    const int s = 1 + trial % 7;
    ParamVector mean = ParamVector::Zero(d);
    for (int i = 0; i < s; ++i) {
      ClientReturn r;
      r.client_id = static_cast<ClientId>(i);
      r.model = random_point(d, gen, 2.0);
      mean += r.model;
      returns.push_back(r);
    }
    mean /= s;
    const ParamVector delta = make_pseudo_gradient(w, returns).aggregate;
    const ParamVector gd = server_update_gd(w, delta, 1.0);
    err_gd = std::max(err_gd, (gd - mean).lpNorm<Eigen::Infinity>());
    DfwConfig plain;
    plain.weight_decay_lambda = 0.0;
    plain.proximal_eta = 1.0;
    err_dfw = std::max(err_dfw, (apply_dfw_step(w, delta, 1.0, plain) - gd).lpNorm<Eigen::Infinity>());

    DfwConfig cfg;
    cfg.proximal_eta = 0.01 + 3.0 * u(gen);
    cfg.weight_decay_lambda = u(gen);
    cfg.gamma_formula = trial % 2 ? GammaFormula::kLiteralDual : GammaFormula::kPseudoObjective;
    const double gamma = dfw_step_size(w, delta, n(gen) * 5.0, cfg);
    if (!(gamma >= 0.0 && gamma <= 1.0)) ++gamma_violations;
  }
  std::ostringstream d;
  d << "gd_vs_mean=" << err_gd << " dfw_vs_gd=" << err_dfw << " gamma_violations=" << gamma_violations;
  report("A5", err_gd <= 1e-12 && err_dfw <= 1e-12 && gamma_violations == 0, d.str());
}

void a6() {
  std::mt19937_64 gen(66);
  std::vector<QuadraticTerm> terms;
  for (int i = 0; i < 8; ++i) {
    const Eigen::MatrixXd g = Eigen::MatrixXd::NullaryExpr(3, 3, [&] { return std::normal_distribution<double>(0, 1)(gen); });
    terms.push_back({g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(3, 3), random_point(3, gen)});
  }
  const QuadraticObjective quad(terms);
  const LogisticObjective lr(random_shard(8, 3, 2, gen), 0.1);
  const LinearHingeObjective hinge(random_shard(7, 2, 3, gen));
  const SoftmaxObjective sm(random_shard(8, 2, 3, gen), 0.01);
  const TinyMlpObjective mlp(random_shard(6, 2, 2, gen), 4, 1e-3);
  const auto cubic = scalar_cubic_pair();
  const std::vector<const Objective*> oracles = {&quad, &lr, &hinge, &sm, &mlp, cubic[0].get(), cubic[1].get()};
  double worst = 0.0;
  long batches = 0;
  for (const Objective* o : oracles) {
    const ParamVector w = random_point(o->dimension(), gen);
    const ParamVector full = stochastic_gradient(*o, w, Batch::full(o->num_rows()));
    for (Index b = 1; b <= o->num_rows(); ++b) {
      ParamVector mean = ParamVector::Zero(w.size());
      const auto subsets = testing::all_subsets(o->num_rows(), b);
      for (const auto& rows : subsets) mean += stochastic_gradient(*o, w, Batch{rows});
      batches += static_cast<long>(subsets.size());
      mean /= static_cast<double>(subsets.size());
      worst = std::max(worst, (mean - full).lpNorm<Eigen::Infinity>());
    }
  }
  std::ostringstream d;
  d << "kinds=" << oracles.size() << " batches=" << batches << " max_error=" << worst;
  report("A6", worst <= 1e-10, d.str());
}

void a7() {
  std::mt19937_64 gen(77);
  std::vector<QuadraticTerm> terms;
  for (int i = 0; i < 5; ++i) {
    const Eigen::MatrixXd g = Eigen::MatrixXd::NullaryExpr(4, 4, [&] { return std::normal_distribution<double>(0, 1)(gen); });
    terms.push_back({g * g.transpose(), random_point(4, gen)});
  }
  const QuadraticObjective quad(terms);
  const LogisticObjective lr(random_shard(20, 4, 2, gen), 0.01);
  const TinyMlpObjective mlp(random_shard(20, 4, 3, gen), 8, 1e-4);
  double worst_smooth = 0.0, worst_mlp = 0.0;
  int skipped = 0;
  for (int trial = 0; trial < 20; ++trial) {
    for (const Objective* o : {static_cast<const Objective*>(&quad), static_cast<const Objective*>(&lr)}) {
      const GradientCheck c = finite_difference_check(*o, random_point(o->dimension(), gen), Batch::full(o->num_rows()), 1e-5);
      if (c.skipped) ++skipped;
      worst_smooth = std::max(worst_smooth, c.max_relative_error);
    }
    const GradientCheck c = finite_difference_check(mlp, random_point(mlp.dimension(), gen, 0.5), Batch::full(20), 1e-5);
    if (c.skipped) ++skipped;
    worst_mlp = std::max(worst_mlp, c.max_relative_error);
  }
  std::ostringstream d;
  d << "quadratic_logistic=" << worst_smooth << " tinymlp=" << worst_mlp << " skipped=" << skipped;
  report("A7", worst_smooth < 1e-8 && worst_mlp < 1e-4 && skipped == 0, d.str());
}

bool exact_partition(const std::vector<std::vector<std::size_t>>& parts, std::size_t rows, std::size_t min_rows) {
  std::vector<int> seen(rows, 0);
  for (const auto& p : parts) {
    if (p.size() < min_rows) return false;
    for (std::size_t r : p) {
      if (r >= rows) return false;
      ++seen[r];
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

void a8() {
  const int classes = 10;
  std::vector<int> iid_labels;
  for (int c = 0; c < classes; ++c) iid_labels.insert(iid_labels.end(), 1000, c);
  double worst_tv = 0.0;
  bool exact = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PartitionConfig cfg;
    cfg.alpha = 1e6;
    cfg.num_clients = 10;
    cfg.seed = seed;
    const auto parts = dirichlet_partition(iid_labels, cfg);
    exact = exact && exact_partition(parts, iid_labels.size(), 1);
    for (const auto& p : parts) {
      std::vector<double> hist(classes, 0.0);
      for (std::size_t r : p) hist[iid_labels[r]] += 1.0;
      double tv = 0.0;
      for (double h : hist) tv += std::abs(h / static_cast<double>(p.size()) - 1.0 / classes);
      worst_tv = std::max(worst_tv, tv / 2.0);
    }
  }

  std::vector<int> skew_labels;
  for (int c = 0; c < classes; ++c) skew_labels.insert(skew_labels.end(), 300, c);
  std::vector<double> medians;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PartitionConfig cfg;
    cfg.alpha = 0.1;
    cfg.num_clients = 100;
    cfg.seed = seed;
    const auto parts = dirichlet_partition(skew_labels, cfg);
    exact = exact && exact_partition(parts, skew_labels.size(), 1);
    std::vector<double> shares;
    for (const auto& p : parts) {
      std::vector<double> hist(classes, 0.0);
      for (std::size_t r : p) hist[skew_labels[r]] += 1.0;
      shares.push_back(*std::max_element(hist.begin(), hist.end()) / static_cast<double>(p.size()));
    }
    std::nth_element(shares.begin(), shares.begin() + 50, shares.end());
    medians.push_back(shares[50]);
  }
  const double min_median = *std::min_element(medians.begin(), medians.end());
  std::ostringstream d;
  d << "iid_max_tv=" << worst_tv << " skew_min_median_share=" << min_median << " exact=" << exact;
  report("A8", worst_tv < 0.02 && min_median > 0.5 && exact, d.str());
}

// The separable logistic objective has infimum 0, so f itself is the gap.
void a9() {
  const auto start = Clock::now();
  ExperimentConfig cfg = preset("logistic-convex");
  cfg.simulation.total_clients = 10;
  cfg.simulation.sampled_per_round = 1;
  cfg.simulation.rounds = 400;
  cfg.diagnostic_mode = false;
  const Federation fed = build_federation(cfg);
  double gap100 = 0.0, gap400 = 0.0;
  const int seeds = 30;
  for (int seed = 0; seed < seeds; ++seed) {
    cfg.simulation.seed = static_cast<std::uint64_t>(seed);
    const AlgorithmBundle algo = make_bundle(cfg);
    ServerState state = initial_state(fed);
    ParamVector sum = ParamVector::Zero(fed.initial_model.size());
    for (std::size_t t = 0; t < cfg.simulation.rounds; ++t) {
      state = run_round(state, cfg.simulation, fed, algo).state;
      sum += state.global_model;
      if (t + 1 == 100) gap100 += fed.global_value(sum / 100.0);
      if (t + 1 == 400) gap400 += fed.global_value(sum / 400.0);
    }
  }
  gap100 /= seeds;
  gap400 /= seeds;
  const double secs = seconds_since(start);
  std::ostringstream d;
  d << "gap100=" << gap100 << " gap400=" << gap400 << " ratio=" << gap400 / gap100 << " time=" << fmt("%.2fs", secs);
  report("A9", gap400 <= 0.55 * gap100 && secs < 120.0, d.str());
}

void a10(const LogisticRun& run) {
  int moment_violations = 0, drift_violations = 0, missing = 0;
  for (const RoundRecord& rec : run.result.records) {
    const RoundDiagnostics& d = *rec.diagnostics;
    if (!d.second_moment_lhs || !d.drift_lhs) {
      ++missing;
      continue;
    }
    if (*d.second_moment_lhs > *d.second_moment_rhs) ++moment_violations;
    if (*d.drift_lhs > *d.drift_rhs) ++drift_violations;
  }
  std::ostringstream d;
  d << "second_moment_violations=" << moment_violations << " drift_violations=" << drift_violations
    << " missing=" << missing;
  report("A10", moment_violations == 0 && drift_violations == 0 && missing == 0, d.str());
}

void a11() {
  std::ostringstream d;
  bool pass = true;
  for (const std::string& algo : server_algo_names()) {
    ExperimentConfig cfg = preset("quadratic-sc");
    cfg.server_algo = algo;
    cfg.client_algo = algo == "fedli-ls" || algo == "fedli-lu" ? "armijo-sgd" : "sgd";
    cfg.simulation.rounds = 500;
    cfg.diagnostic_mode = false;
    const Federation fed = build_federation(cfg);
    const SimulationResult r = run_simulation(cfg.simulation, fed, make_bundle(cfg));
    long first = -1;
    double min_eta_g = std::numeric_limits<double>::infinity();
    for (const RoundRecord& rec : r.records) {
      if (first < 0 && rec.dist_sq && *rec.dist_sq < 1e-6) first = static_cast<long>(rec.round);
      min_eta_g = std::min(min_eta_g, rec.eta_g);
    }
    bool ok = first >= 0 && !r.stopped_early;
    if (algo == "fedexp") ok = ok && min_eta_g >= 1.0;
    pass = pass && ok;
    d << algo << "@" << first << (ok ? "" : "(x)") << ' ';
  }
  report("A11", pass, d.str());
}

void a12() {
  bool pass = true;
  std::ostringstream d;
  for (const std::string& name : preset_names()) {
    ExperimentConfig cfg = preset(name);
    const auto once = [&] {
      std::ostringstream out;
      const Federation fed = build_federation(cfg);
      write_jsonl(out, run_simulation(cfg.simulation, fed, make_bundle(cfg)).records);
      return out.str();
    };
    const std::string a = once();
    const std::string b = once();
    const bool same = !a.empty() && a == b;
    pass = pass && same;
    d << name << (same ? "=same " : "=DIFFERENT ");
  }
  report("A12", pass, d.str());
}

}  // namespace

int main() {
  a1();
  const LogisticRun logistic = logistic_run();
  a2(logistic);
  a3();
  a4();
  a5();
  a6();
  a7();
  a8();
  a9();
  a10(logistic);
  a11();
  a12();
  std::printf("%d of 12 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
