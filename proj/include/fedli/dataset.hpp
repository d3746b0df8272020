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

#ifndef FEDLI_DATASET_HPP_
#define FEDLI_DATASET_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedli/core.hpp"
#include "fedli/rng.hpp"

namespace fedli {

// Feature matrix with one integer class label per row.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXi labels;
  int num_classes = 0;
  std::vector<std::string> feature_names;

  Index rows() const { return features.rows(); }
  Index cols() const { return features.cols(); }
  void validate() const;
};

// Rows owned by one client, materialized.
struct DatasetShard {
  Eigen::MatrixXd features;
  Eigen::VectorXi labels;
  int num_classes = 0;
  ClientId client_id = 0;

  Index rows() const { return features.rows(); }
};

DatasetShard make_shard(const Dataset& data, std::span<const std::size_t> rows,
                        ClientId client_id);
Dataset subset(const Dataset& data, std::span<const std::size_t> rows);

// CSV with a header row; the column named "label" holds integer class ids,
// every other column is a feature.
Dataset read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Dataset& data);

// Binary layout: "FLDS", u32 rows, u32 cols, rows*cols little-endian f64
// (row-major), then rows u32 labels.
Dataset read_flds(const std::filesystem::path& path);
void write_flds(const std::filesystem::path& path, const Dataset& data);

// Picks the reader from the file's magic bytes.
Dataset read_dataset(const std::filesystem::path& path);

// Isotropic Gaussian clusters, one per class, centres at distance
// `separation` from the origin.
Dataset make_gaussian_blobs(int num_classes, Index rows_per_class,
                            Index num_features, double separation,
                            RngStream& rng);

// Binary data, linearly separable through the origin with the given margin.
Dataset make_separable_binary(Index rows, Index num_features, double margin,
                              RngStream& rng);

// Splits off the trailing `fraction` of a shuffled copy as a test set.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data,
                                             double test_fraction,
                                             RngStream& rng);

}  // namespace fedli

#endif  // FEDLI_DATASET_HPP_
