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

#include <random>

#include <gtest/gtest.h>

#include "fedli/server.hpp"

namespace fedli {
namespace {

ParamVector vec(std::initializer_list<double> v) {
  ParamVector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

ClientReturn ret(ClientId id, double value, double step, std::size_t shard) {
  ClientReturn r;
  r.client_id = id;
  r.model = vec({0});
  r.objective_value = value;
  r.last_step_size = step;
  r.shard_size = shard;
  return r;
}

std::shared_ptr<const QuadraticObjective> square(double l, double center) {
  return std::make_shared<QuadraticObjective>(std::vector<QuadraticTerm>{
      {l * Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Constant(1, center)}});
}

TEST(FunctionSync, UniformAndWeighted) {
  const std::vector<ClientReturn> rs{ret(0, 0.5, 0.1, 10), ret(1, 1.5, 0.2, 30)};
  EXPECT_EQ(function_sync(rs, SyncPolicy{}), 1.0);
  SyncPolicy weighted;
  weighted.function_sync = FunctionSyncPolicy::kShardWeightedMean;
  EXPECT_EQ(function_sync(rs, weighted), 1.25);
  const std::vector<ClientReturn> rs2{ret(0, 1.0, 0.1, 1), ret(1, 2.0, 0.2, 3)};
  EXPECT_EQ(function_sync(rs2, weighted), 1.75);
  EXPECT_THROW(function_sync(std::span<const ClientReturn>{}, SyncPolicy{}), ProtocolError);
}

TEST(StepSizeSync, UnitAndMax) {
  const std::vector<ClientReturn> rs{ret(0, 0, 0.5, 1), ret(1, 0, 0.3, 1)};
  EXPECT_EQ(step_size_sync(rs, SyncPolicy{}), 1.0);
  SyncPolicy max_policy;
  max_policy.step_size_sync = StepSizeSyncPolicy::kMaxOfClients;
  EXPECT_EQ(step_size_sync(rs, max_policy), 0.5);
  const std::vector<ClientReturn> one{ret(0, 0, 0.3, 1)};
  EXPECT_EQ(step_size_sync(one, max_policy), 0.3);
}

TEST(ServerUpdateGd, Examples) {
  EXPECT_EQ(server_update_gd(vec({1, 1}), vec({0.5, -0.5}), 1.0), vec({0.5, 1.5}));
  EXPECT_EQ(server_update_gd(vec({1, 1}), vec({0.5, -0.5}), 0.0), vec({1, 1}));
  EXPECT_EQ(server_update_gd(vec({3}), vec({1}), 2.0), vec({1}));
}

TEST(ServerUpdateDfw, Example) {
  DfwConfig cfg;
  cfg.proximal_eta = 1.0;
  cfg.weight_decay_lambda = 1e-3;
  const DfwStep s = server_update_dfw(vec({2, 2}), vec({1, 0}), 0.5, cfg);
  EXPECT_NEAR(s.gamma, 0.498, 1e-11);
  EXPECT_NEAR(s.next(0), 1.5, 1e-11);
  EXPECT_NEAR(s.next(1), 1.998, 1e-15);
}

TEST(ServerUpdateDfw, ZeroObjectiveGivesZeroGammaAndPureDecay) {
  DfwConfig cfg;
  cfg.weight_decay_lambda = 0.0;
  const DfwStep s = server_update_dfw(vec({2, 2}), vec({1, 0}), 0.0, cfg);
  EXPECT_EQ(s.gamma, 0.0);
  EXPECT_EQ(s.next, vec({2, 2}));
}

TEST(ServerUpdateDfw, LargeObjectiveClipsToOne) {
  DfwConfig cfg;
  cfg.weight_decay_lambda = 0.0;
  const DfwStep s = server_update_dfw(vec({2}), vec({0.1}), 100.0, cfg);
  EXPECT_EQ(s.gamma, 1.0);
  EXPECT_NEAR(s.next(0), 1.9, 1e-15);
}

TEST(ServerUpdateDfw, ZeroDeltaGivesZeroGamma) {
  EXPECT_EQ(dfw_step_size(vec({1}), vec({0}), 3.0, DfwConfig{}), 0.0);
}

TEST(ServerUpdateDfw, LiteralDualReading) {
  DfwConfig cfg;
  cfg.weight_decay_lambda = 0.1;
  cfg.gamma_formula = GammaFormula::kLiteralDual;
  // −η·Δᵀ(λw) = −0.1 and f_g/(η‖Δ‖²) = 0.2.
  EXPECT_NEAR(dfw_step_size(vec({2}), vec({0.5}), 0.05, cfg), -0.1 + 0.2, 1e-11);
}

TEST(ServerUpdateDfw, GammaStaysInUnitInterval) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0, 3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    DfwConfig cfg;
    cfg.proximal_eta = 0.01 + 2 * u(gen);
    cfg.weight_decay_lambda = u(gen);
    cfg.gamma_formula = trial % 2 ? GammaFormula::kLiteralDual : GammaFormula::kPseudoObjective;
    const double gamma = dfw_step_size(vec({n(gen), n(gen)}), vec({n(gen), n(gen)}), n(gen), cfg);
    EXPECT_GE(gamma, 0.0);
    EXPECT_LE(gamma, 1.0);
  }
}

TEST(ServerUpdateFedAdam, FirstStep) {
  ServerState s;
  s.global_model = vec({1});
  const ServerState next = server_update_fedadam(s, vec({1}), FedAdamConfig{});
  // m = 0.1, v = 0.01, step = 0.01 · 0.1 / (0.1 + 0.001).
  EXPECT_NEAR(next.global_model(0), 1.0 - 0.01 * 0.1 / 0.101, 1e-15);
  EXPECT_NEAR(next.global_model(0), 0.9901, 1e-5);
  EXPECT_NEAR((*next.adam_m)(0), 0.1, 1e-15);
  EXPECT_NEAR((*next.adam_v)(0), 0.01, 1e-15);
}

TEST(ServerUpdateFedAdam, ZeroDeltaFromZeroMomentsIsIdentity) {
  ServerState s;
  s.global_model = vec({1, -2});
  EXPECT_EQ(server_update_fedadam(s, vec({0, 0}), FedAdamConfig{}).global_model, vec({1, -2}));
}

TEST(ServerUpdateFedExp, Examples) {
  const std::vector<ParamVector> agree{vec({1}), vec({1})};
  EXPECT_EQ(server_update_fedexp(vec({0}), agree, 0.0).eta_g, 1.0);
  const std::vector<ParamVector> spread{vec({3}), vec({-1})};
  const FedExpStep s = server_update_fedexp(vec({0}), spread, 0.0);
  EXPECT_EQ(s.eta_g, 2.5);
  EXPECT_EQ(s.next, vec({-2.5}));
  const std::vector<ParamVector> cancel{vec({1, 0}), vec({-1, 0})};
  EXPECT_EQ(server_update_fedexp(vec({0, 0}), cancel, 0.0).eta_g, 1.0);
  const FedExpStep c = server_update_fedexp(vec({0, 0}), cancel, 0.1);
  EXPECT_NEAR(c.eta_g, 5.0, 1e-15);
  EXPECT_EQ(c.next, vec({0, 0}));
}

TEST(ServerUpdateFedExp, NeverBelowOne) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ParamVector> deltas;
    for (int i = 0; i < 1 + trial % 6; ++i) deltas.push_back(vec({n(gen), n(gen)}));
    EXPECT_GE(server_update_fedexp(vec({0, 0}), deltas, 1e-3 * (trial % 3)).eta_g, 1.0);
  }
}

TEST(FedProxObjective, Examples) {
  const auto q = square(1.0, 0.0);
  const ValueAndGradient v = fedprox_client_objective(*q, vec({2}), vec({0}), 1.0, Batch::full(1));
  EXPECT_EQ(v.value, 4.0);
  EXPECT_EQ(v.gradient, vec({4}));
  const ValueAndGradient plain = fedprox_client_objective(*q, vec({2}), vec({0}), 0.0, Batch::full(1));
  EXPECT_EQ(plain.value, 2.0);
  EXPECT_EQ(plain.gradient, vec({2}));
  const ValueAndGradient anchored = fedprox_client_objective(*q, vec({2}), vec({2}), 5.0, Batch::full(1));
  EXPECT_EQ(anchored.value, 2.0);
  EXPECT_EQ(anchored.gradient, vec({2}));
}

TEST(Scaffold, FirstRoundControlIsTheGradient) {
  const std::vector<ObjectivePtr> oracles{square(2.0, 1.0), square(1.0, -1.0)};
  ServerState s;
  s.global_model = vec({3});
  const std::vector<ClientId> sampled{0, 1};
  ScaffoldConfig cfg;
  cfg.eta_l = 0.1;
  const ScaffoldRound r = scaffold_round(s, sampled, oracles, 1, cfg, 0);
  // ∇f_0(3) = 2·(3 − 1) = 4, ∇f_1(3) = 1·(3 + 1) = 4.
  EXPECT_NEAR(r.state.client_controls[0](0), 4.0, 1e-14);
  EXPECT_NEAR(r.state.client_controls[1](0), 4.0, 1e-14);
  EXPECT_NEAR((*r.state.server_control)(0), 4.0, 1e-14);
  EXPECT_NEAR(r.state.global_model(0), 3.0 - 0.1 * 4.0, 1e-14);
}

TEST(Scaffold, IdenticalClientsMatchPlainSgd) {
  const auto q = square(1.5, 2.0);
  const std::vector<ObjectivePtr> oracles{q, q, q};
  const std::vector<ClientId> sampled{0, 1, 2};
  ScaffoldConfig cfg;
  cfg.eta_l = 0.2;
  ServerState s;
  s.global_model = vec({-1});
  double w = -1.0;
  for (int round = 0; round < 5; ++round) {
    s = scaffold_round(s, sampled, oracles, 3, cfg, 7).state;
    s.round_index += 1;
    for (int k = 0; k < 3; ++k) w -= 0.2 * 1.5 * (w - 2.0);
    EXPECT_NEAR(s.global_model(0), w, 1e-12);
  }
}

TEST(Scaffold, RejectsZeroLocalStep) {
  const std::vector<ObjectivePtr> oracles{square(1.0, 0.0)};
  ServerState s;
  s.global_model = vec({1});
  const std::vector<ClientId> sampled{0};
  ScaffoldConfig cfg;
  cfg.eta_l = 0.0;
  EXPECT_THROW(scaffold_round(s, sampled, oracles, 1, cfg, 0), ConfigError);
}

}  // namespace
}  // namespace fedli
