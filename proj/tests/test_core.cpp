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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "fedli/core.hpp"
#include "fedli/rng.hpp"

namespace fedli {
namespace {

ParamVector vec(std::initializer_list<double> v) {
  ParamVector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(ModelStateDifference, Examples) {
  EXPECT_EQ(model_state_difference(vec({1, 1}), vec({1, 1})), vec({0, 0}));
  EXPECT_EQ(model_state_difference(vec({2, 3}), vec({0, 1})), vec({2, 2}));
  EXPECT_EQ(model_state_difference(vec({1}), vec({1.5})), vec({-0.5}));
}

TEST(ModelStateDifference, SelfDifferenceIsExactlyZero) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0, 10);
  for (int trial = 0; trial < 50; ++trial) {
    ParamVector w(7);
    for (Index j = 0; j < 7; ++j) w(j) = n(gen);
    EXPECT_TRUE((model_state_difference(w, w).array() == 0.0).all());
  }
}

TEST(ModelStateDifference, DimensionMismatchThrows) {
  EXPECT_THROW(model_state_difference(vec({1, 2}), vec({1})), ConfigError);
}

TEST(AggregateDeltas, Examples) {
  EXPECT_EQ(aggregate_deltas(std::vector<ParamVector>{vec({1, 0}), vec({0, 1})}), vec({0.5, 0.5}));
  EXPECT_EQ(aggregate_deltas(std::vector<ParamVector>{vec({2, 2})}), vec({2, 2}));
  EXPECT_EQ(aggregate_deltas(std::vector<ParamVector>{vec({1, 1}), vec({1, 1}), vec({4, 4})}), vec({2, 2}));
}

TEST(AggregateDeltas, EmptyListIsAProtocolError) {
  EXPECT_THROW(aggregate_deltas(std::vector<ParamVector>{}), ProtocolError);
}

TEST(AggregateDeltas, PermutationInvariantWithinTolerance) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<ParamVector> d(9, ParamVector(5));
    for (auto& v : d) {
      for (Index j = 0; j < 5; ++j) v(j) = n(gen);
    }
    const ParamVector a = aggregate_deltas(d);
    std::shuffle(d.begin(), d.end(), gen);
    EXPECT_LE((aggregate_deltas(d) - a).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(AggregateDeltas, Linear) {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> n(0, 1);
  std::vector<ParamVector> d(4, ParamVector(3));
  for (auto& v : d) {
    for (Index j = 0; j < 3; ++j) v(j) = n(gen);
  }
  for (double c : {-2.0, 0.0, 0.5, 3.0}) {
    std::vector<ParamVector> scaled;
    for (const auto& v : d) scaled.push_back(c * v);
    EXPECT_LE((aggregate_deltas(scaled) - c * aggregate_deltas(d)).norm(), 1e-12);
  }
}

TEST(PseudoGradient, ReducesInAscendingClientOrder) {
  const ParamVector w = vec({1, 1});
  std::vector<ClientReturn> returns(3);
  returns[0].client_id = 7;
  returns[0].model = vec({0.1, 0.2});
  returns[1].client_id = 2;
  returns[1].model = vec({0.3, -1e16});
  returns[2].client_id = 5;
  returns[2].model = vec({0.7, 1e16});
  const PseudoGradient pg = make_pseudo_gradient(w, returns);
  // Ascending ids 2, 5, 7: the reduction order is fixed, so the result is
  // exactly the left-to-right sum in that order.
  const ParamVector expected =
      ((w - returns[1].model) + (w - returns[2].model) + (w - returns[0].model)) / 3.0;
  EXPECT_EQ(pg.aggregate, expected);
  ASSERT_EQ(pg.per_client.size(), 3u);
  EXPECT_EQ(pg.per_client.begin()->first, 2u);
}

TEST(PseudoGradient, RejectsDuplicatesAndNonFinite) {
  std::vector<ClientReturn> r(2);
  r[0].client_id = r[1].client_id = 1;
  r[0].model = r[1].model = vec({0});
  EXPECT_THROW(make_pseudo_gradient(vec({0}), r), ProtocolError);
  r[1].client_id = 2;
  r[1].model = vec({std::nan("")});
  EXPECT_THROW(make_pseudo_gradient(vec({0}), r), NumericError);
}

TEST(SimulationConfig, DefaultsAndParticipation) {
  SimulationConfig s;
  EXPECT_EQ(s.total_clients, 100u);
  EXPECT_EQ(s.sampled_per_round, 10u);
  EXPECT_EQ(s.local_steps, 1u);
  EXPECT_EQ(s.rounds, 500u);
  EXPECT_EQ(s.participation(), 0.1);
  s.sampled_per_round = 101;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(TheoreticalConstants, MuAboveLRejected) {
  TheoreticalConstants c{1.0, 2.0, 0.0, 0.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c.strong_convexity_mu = 0.5;
  EXPECT_NO_THROW(c.validate());
}

TEST(RngStream, PureFunctionOfKey) {
  RngStream a(5, 3, StreamPurpose::kBatchSampling, 9);
  RngStream b(5, 3, StreamPurpose::kBatchSampling, 9);
  RngStream c(5, 3, StreamPurpose::kClientSampling, 9);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    differs = differs || x != c();
  }
  EXPECT_TRUE(differs);
}

TEST(RngStream, UniformIndexCoversRangeEvenly) {
  RngStream r(1, 0, StreamPurpose::kData);
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 60000; ++i) ++counts[r.uniform_index(6)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

}  // namespace
}  // namespace fedli
