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

#include "fedli/problems.hpp"

#include <algorithm>
#include <random>

#include "fedli/dataset.hpp"
#include "fedli/partition.hpp"
#include "fedli/rng.hpp"

namespace fedli {

namespace {

Federation quadratic_federation(const ExperimentConfig& cfg) {
  const auto n = cfg.simulation.total_clients;
  const auto d = static_cast<Index>(cfg.problem.dimension);
  RngStream rng(cfg.partition.seed, 0, StreamPurpose::kData);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Spectrum 0.5..2 in every client, rotated independently.
  Eigen::VectorXd spectrum(d);
  for (Index j = 0; j < d; ++j) {
    spectrum(j) = d == 1 ? 0.5 : 0.5 + 1.5 * static_cast<double>(j) / static_cast<double>(d - 1);
  }

  Federation fed;
  Eigen::MatrixXd h_sum = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd lin_sum = Eigen::VectorXd::Zero(d);
  double l_max = 0.0;
  double mu_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd g(d, d);
    for (Index r = 0; r < d; ++r) {
      for (Index c = 0; c < d; ++c) g(r, c) = normal(rng);
    }
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    QuadraticTerm term;
    term.A = q * spectrum.asDiagonal() * q.transpose();
    term.A = 0.5 * (term.A + term.A.transpose());
    term.b = Eigen::VectorXd(d);
    for (Index j = 0; j < d; ++j) term.b(j) = cfg.problem.target_scale * normal(rng);
    h_sum += term.A;
    lin_sum += term.A * term.b;
    auto oracle = std::make_shared<QuadraticObjective>(std::vector<QuadraticTerm>{term});
    l_max = std::max(l_max, oracle->constants().smoothness_L);
    mu_min = std::min(mu_min, oracle->constants().strong_convexity_mu);
    fed.clients.push_back(std::move(oracle));
  }
  fed.optimum = ParamVector(h_sum.ldlt().solve(lin_sum));
  fed.initial_model = ParamVector::Zero(d);
  fed.optimal_value = fed.global_value(*fed.optimum);
  fed.constants.smoothness_L = l_max;
  fed.constants.strong_convexity_mu = mu_min;
  return fed;
}

Federation counterexample_federation(const ExperimentConfig& cfg) {
  if (cfg.simulation.total_clients != 2) throw ConfigError("counterexample needs exactly N = 2 clients");
  Federation fed;
  fed.clients = scalar_cubic_pair();
  fed.initial_model = ParamVector::Constant(1, 1.0);
  return fed;
}

Dataset synthetic_data(const ExperimentConfig& cfg) {
  const ProblemSettings& p = cfg.problem;
  RngStream rng(cfg.partition.seed, 0, StreamPurpose::kData);
  const auto total_train = static_cast<double>(cfg.simulation.total_clients * p.rows_per_client);
  const auto total = static_cast<Index>(std::ceil(total_train / (1.0 - p.test_fraction)));
  const auto d = static_cast<Index>(p.dimension);
  if (cfg.objective == "logistic-convex") return make_separable_binary(total, d, p.margin, rng);
  const Index per_class = std::max<Index>(1, (total + p.num_classes - 1) / p.num_classes);
  return make_gaussian_blobs(p.num_classes, per_class, d, p.separation, rng);
}

Federation data_federation(const ExperimentConfig& cfg) {
  const ProblemSettings& p = cfg.problem;
  Dataset data = p.dataset.empty() ? synthetic_data(cfg) : read_dataset(p.dataset);
  data.validate();
  if (cfg.objective == "logistic-convex" && data.num_classes > 2) {
    throw InputError("logistic-convex needs binary labels, found " +
                     std::to_string(data.num_classes) + " classes");
  }
  Federation fed;
  Dataset train = data;
  if (p.test_fraction > 0.0) {
    RngStream rng(cfg.partition.seed, 1, StreamPurpose::kData);
    auto [tr, te] = train_test_split(data, p.test_fraction, rng);
    train = std::move(tr);
    fed.test_set = std::move(te);
  }
  PartitionConfig pc;
  pc.alpha = cfg.partition.alpha;
  pc.num_clients = cfg.simulation.total_clients;
  pc.seed = cfg.partition.seed;
  pc.min_samples_per_client = cfg.partition.min_samples_per_client;
  const std::vector<int> labels(train.labels.data(), train.labels.data() + train.labels.size());
  const auto shards = dirichlet_partition(labels, pc);

  TheoreticalConstants k;
  bool beta_known = true;
  for (std::size_t i = 0; i < shards.size(); ++i) {
    DatasetShard shard = make_shard(train, shards[i], i);
    ObjectivePtr oracle;
    if (cfg.objective == "logistic-convex") {
      oracle = std::make_shared<LogisticObjective>(std::move(shard), p.l2);
    } else if (cfg.objective == "tinymlp-nonconvex") {
      oracle = std::make_shared<TinyMlpObjective>(std::move(shard), static_cast<Index>(p.hidden), p.l2);
    } else {
      oracle = std::make_shared<SoftmaxObjective>(std::move(shard), p.l2);
    }
    const TheoreticalConstants c = oracle->constants();
    k.smoothness_L = std::max(k.smoothness_L, c.smoothness_L);
    k.strong_convexity_mu = i == 0 ? c.strong_convexity_mu : std::min(k.strong_convexity_mu, c.strong_convexity_mu);
    k.lipschitz_beta = std::max(k.lipschitz_beta, c.lipschitz_beta);
    beta_known = beta_known && c.lipschitz_beta > 0.0;
    fed.clients.push_back(std::move(oracle));
  }
  if (!beta_known) k.lipschitz_beta = 0.0;
  if (cfg.objective == "tinymlp-nonconvex") k = {};
  fed.constants = k;

  const Index dim = fed.clients.front()->dimension();
  fed.initial_model = ParamVector::Zero(dim);
  if (cfg.objective == "tinymlp-nonconvex") {
    RngStream rng(cfg.simulation.seed, 0, StreamPurpose::kInitialization);
    std::normal_distribution<double> normal(0.0, 0.3);
    for (Index j = 0; j < dim; ++j) fed.initial_model(j) = normal(rng);
  }
  return fed;
}

bool full_batch_everywhere(const Federation& fed, std::size_t batch_size) {
  return std::all_of(fed.clients.begin(), fed.clients.end(), [&](const ObjectivePtr& c) {
    return batch_size >= static_cast<std::size_t>(c->num_rows());
  });
}

}  // namespace

BoundKind resolve_bound(const ExperimentConfig& cfg) {
  if (cfg.bound == "none") return BoundKind::kNone;
  if (cfg.bound == "strongly-convex") return BoundKind::kStronglyConvex;
  if (cfg.bound == "convex-gap") return BoundKind::kConvexGap;
  if (cfg.bound == "nonconvex") return BoundKind::kNonconvex;
  if (cfg.server_algo != "fedli-ls") return BoundKind::kNone;
  if (cfg.objective == "quadratic-sc") return BoundKind::kStronglyConvex;
  if (cfg.objective == "logistic-convex") return BoundKind::kNonconvex;
  return BoundKind::kNone;
}

Federation build_federation(const ExperimentConfig& cfg) {
  cfg.validate();
  Federation fed;
  if (cfg.objective == "quadratic-sc") {
    fed = quadratic_federation(cfg);
  } else if (cfg.objective == "counterexample") {
    fed = counterexample_federation(cfg);
  } else {
    fed = data_federation(cfg);
  }
  // The variance bound only feeds the bound formulas; full batches have none.
  const BoundKind bound = resolve_bound(cfg);
  if ((bound == BoundKind::kConvexGap || bound == BoundKind::kNonconvex) &&
      !full_batch_everywhere(fed, cfg.client.batch_size)) {
    double g = 0.0;
    for (std::size_t i = 0; i < fed.clients.size(); ++i) {
      RngStream rng(cfg.partition.seed, i, StreamPurpose::kVarianceEstimate);
      g = std::max(g, estimate_variance_bound(*fed.clients[i], fed.initial_model,
                                              cfg.client.batch_size, rng));
    }
    fed.constants.variance_G = g;
  }
  fed.validate();
  return fed;
}

AlgorithmBundle make_bundle(const ExperimentConfig& cfg) {
  cfg.validate();
  AlgorithmBundle b;
  if (cfg.client_algo == "armijo-sgd") {
    b.local.algorithm = ArmijoSgd{cfg.client.armijo};
  } else {
    b.local.algorithm = PlainSgd{cfg.client.eta_l};
  }
  b.local.batch_size = cfg.client.batch_size;
  b.local.objective_eval = cfg.client.objective_eval;

  const ServerSettings& s = cfg.server;
  if (cfg.server_algo == "fedli-ls") {
    b.server = FedLiLs{s.sync};
  } else if (cfg.server_algo == "fedli-lu") {
    b.server = FedLiLu{s.dfw, s.sync};
  } else if (cfg.server_algo == "fedavg") {
    b.server = FedAvg{s.eta_g};
  } else if (cfg.server_algo == "fedprox") {
    b.server = FedProx{s.fedprox_mu, s.eta_g};
  } else if (cfg.server_algo == "scaffold") {
    b.server = Scaffold{s.eta_g};
  } else if (cfg.server_algo == "fedadam") {
    b.server = FedAdam{s.fedadam};
  } else {
    b.server = FedExp{s.fedexp_epsilon};
  }

  for (const auto& round : cfg.prescribed_models) {
    std::vector<ParamVector> models;
    for (const auto& m : round) models.push_back(Eigen::Map<const ParamVector>(m.data(), static_cast<Index>(m.size())));
    b.prescribed_models.push_back(std::move(models));
  }
  b.diagnostic_mode = cfg.diagnostic_mode;
  b.bound = resolve_bound(cfg);
  return b;
}

}  // namespace fedli
