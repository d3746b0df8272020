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

#include "fedli/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace fedli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw InputError("csv line " + std::to_string(line_no) +
                     ": not a number '" + s + "'");
  }
  return v;
}

int parse_label(const std::string& s, std::size_t line_no) {
  const double v = parse_double(s, line_no);
  if (v < 0 || v != std::floor(v) || v > 1e9) {
    throw InputError("csv line " + std::to_string(line_no) +
                     ": label must be a nonnegative integer, got '" + s + "'");
  }
  return static_cast<int>(v);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 4);
}

void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 8);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), bytes);
  if (!in) throw InputError("FLDS file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

int count_classes(const Eigen::VectorXi& labels) {
  return labels.size() == 0 ? 0 : labels.maxCoeff() + 1;
}

}  // namespace

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw InputError("dataset: feature rows and label count differ");
  }
  if (labels.size() > 0 && (labels.minCoeff() < 0 || labels.maxCoeff() >= num_classes)) {
    throw InputError("dataset: label outside declared class count");
  }
  if (!features.allFinite()) throw InputError("dataset: non-finite feature");
}

DatasetShard make_shard(const Dataset& data, std::span<const std::size_t> rows,
                        ClientId client_id) {
  DatasetShard shard;
  shard.features.resize(static_cast<Index>(rows.size()), data.cols());
  shard.labels.resize(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= static_cast<std::size_t>(data.rows())) {
      throw InputError("shard row index out of range");
    }
    shard.features.row(static_cast<Index>(r)) = data.features.row(static_cast<Index>(rows[r]));
    shard.labels(static_cast<Index>(r)) = data.labels(static_cast<Index>(rows[r]));
  }
  shard.num_classes = data.num_classes;
  shard.client_id = client_id;
  return shard;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> rows) {
  DatasetShard s = make_shard(data, rows, 0);
  Dataset out;
  out.features = std::move(s.features);
  out.labels = std::move(s.labels);
  out.num_classes = data.num_classes;
  out.feature_names = data.feature_names;
  return out;
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);
  const auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) {
    throw InputError(path.string() + ": no column named \"label\"");
  }
  const std::size_t label_col = static_cast<std::size_t>(label_it - header.begin());

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw InputError("csv line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    }
    std::vector<double> feats;
    feats.reserve(cells.size() - 1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) {
        labels.push_back(parse_label(cells[c], line_no));
      } else {
        feats.push_back(parse_double(cells[c], line_no));
      }
    }
    rows.push_back(std::move(feats));
  }

  Dataset out;
  const Index n = static_cast<Index>(rows.size());
  const Index d = static_cast<Index>(header.size() - 1);
  out.features.resize(n, d);
  out.labels.resize(n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < d; ++c) out.features(r, c) = rows[r][c];
    out.labels(r) = labels[r];
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_col) out.feature_names.push_back(header[c]);
  }
  out.num_classes = count_classes(out.labels);
  out.validate();
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (Index c = 0; c < data.cols(); ++c) {
    if (c < static_cast<Index>(data.feature_names.size())) {
      out << data.feature_names[c];
    } else {
      out << "x" << c;
    }
    out << ',';
  }
  out << "label\n";
  out.precision(17);
  for (Index r = 0; r < data.rows(); ++r) {
    for (Index c = 0; c < data.cols(); ++c) out << data.features(r, c) << ',';
    out << data.labels(r) << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

Dataset read_flds(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || std::string(magic.data(), 4) != "FLDS") {
    throw InputError(path.string() + ": bad magic, expected FLDS");
  }
  const auto rows = static_cast<Index>(get_le(in, 4));
  const auto cols = static_cast<Index>(get_le(in, 4));
  Dataset out;
  out.features.resize(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      out.features(r, c) = std::bit_cast<double>(get_le(in, 8));
    }
  }
  out.labels.resize(rows);
  for (Index r = 0; r < rows; ++r) {
    const std::uint64_t label = get_le(in, 4);
    if (label > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
      throw InputError(path.string() + ": label out of range");
    }
    out.labels(r) = static_cast<int>(label);
  }
  out.num_classes = count_classes(out.labels);
  out.validate();
  return out;
}

void write_flds(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write("FLDS", 4);
  put_u32(out, static_cast<std::uint32_t>(data.rows()));
  put_u32(out, static_cast<std::uint32_t>(data.cols()));
  for (Index r = 0; r < data.rows(); ++r) {
    for (Index c = 0; c < data.cols(); ++c) put_f64(out, data.features(r, c));
  }
  for (Index r = 0; r < data.rows(); ++r) {
    put_u32(out, static_cast<std::uint32_t>(data.labels(r)));
  }
  if (!out) throw InputError("write failed: " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (in && std::string(magic.data(), 4) == "FLDS") return read_flds(path);
  return read_csv(path);
}

Dataset make_gaussian_blobs(int num_classes, Index rows_per_class,
                            Index num_features, double separation,
                            RngStream& rng) {
  if (num_classes < 2 || rows_per_class < 1 || num_features < 1) {
    throw ConfigError("gaussian blobs: need >= 2 classes, >= 1 row, >= 1 feature");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd centres(num_classes, num_features);
  for (int c = 0; c < num_classes; ++c) {
    for (Index j = 0; j < num_features; ++j) centres(c, j) = normal(rng);
    centres.row(c) *= separation / centres.row(c).norm();
  }
  Dataset out;
  const Index n = rows_per_class * num_classes;
  out.features.resize(n, num_features);
  out.labels.resize(n);
  for (Index r = 0; r < n; ++r) {
    const int c = static_cast<int>(r / rows_per_class);
    for (Index j = 0; j < num_features; ++j) {
      out.features(r, j) = centres(c, j) + normal(rng);
    }
    out.labels(r) = c;
  }
  out.num_classes = num_classes;
  return out;
}

Dataset make_separable_binary(Index rows, Index num_features, double margin,
                              RngStream& rng) {
  if (rows < 2 || num_features < 1 || margin < 0) {
    throw ConfigError("separable binary: need >= 2 rows, >= 1 feature, margin >= 0");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd direction(num_features);
  for (Index j = 0; j < num_features; ++j) direction(j) = normal(rng);
  direction.normalize();

  Dataset out;
  out.features.resize(rows, num_features);
  out.labels.resize(rows);
  for (Index r = 0; r < rows; ++r) {
    Eigen::VectorXd x(num_features);
    for (Index j = 0; j < num_features; ++j) x(j) = normal(rng);
    // Push the point off the separating hyperplane so every row clears
    // the margin.
    const double s = direction.dot(x);
    const int label = (s > 0 || (s == 0 && (r % 2 == 0))) ? 1 : 0;
    const double sign = label == 1 ? 1.0 : -1.0;
    x += (sign * margin) * direction;
    out.features.row(r) = x.transpose();
    out.labels(r) = label;
  }
  out.num_classes = 2;
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data,
                                             double test_fraction,
                                             RngStream& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0,1)");
  }
  std::vector<std::size_t> order = iota_vector(static_cast<std::size_t>(data.rows()));
  shuffle(order, rng);
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(order.size())));
  std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> test(order.end() - static_cast<std::ptrdiff_t>(n_test), order.end());
  // Keep row order stable inside each split.
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {subset(data, train), subset(data, test)};
}

}  // namespace fedli
