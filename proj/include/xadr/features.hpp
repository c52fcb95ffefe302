// Copyright 2026 The xadr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xadr/common.hpp"

namespace xadr {

// Segment lengths in file order: descriptors, path fingerprint, substructure
// keys, circular fingerprint.
struct SegmentSpec {
  int descriptors = 210;
  int path_fp = 512;
  int substructure_keys = 167;
  int circular_fp = 135;

  int total() const { return descriptors + path_fp + substructure_keys + circular_fp; }
  int path_offset() const { return descriptors; }
  int keys_offset() const { return descriptors + path_fp; }
  int circular_offset() const { return descriptors + path_fp + substructure_keys; }

  // "#segments desc=210,path=512,maccs=167,morgan=135"
  std::string header() const;
  static SegmentSpec parse_header(const std::string& line);
  friend bool operator==(const SegmentSpec&, const SegmentSpec&) = default;
};

struct DrugFeatureVector {
  std::string drug_id;
  Eigen::VectorXd values;  // concatenated segments, length spec.total()
};

class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(SegmentSpec spec) : spec_(spec) {}

  const SegmentSpec& spec() const { return spec_; }
  // Validates length and binary segments; rejects duplicates.
  void add(DrugFeatureVector v);
  bool contains(const std::string& id) const { return rows_.count(id) > 0; }
  const DrugFeatureVector& at(const std::string& id) const;
  std::size_t size() const { return rows_.size(); }
  const std::map<std::string, DrugFeatureVector>& rows() const { return rows_; }

 private:
  SegmentSpec spec_;
  std::map<std::string, DrugFeatureVector> rows_;
};

FeatureTable load_features(std::istream& in);
FeatureTable load_features(const std::filesystem::path& path);
// Throws unless the file's header matches `expected`.
FeatureTable load_features(const std::filesystem::path& path, const SegmentSpec& expected);
void write_features(const FeatureTable& table, std::ostream& out);

// Random features with ids D0000.. for desk-scale runs.
FeatureTable synthetic_features(int n_drugs, std::uint64_t seed, SegmentSpec spec = {});

// Trainable per-dimension reweighting of the descriptor and substructure-key
// segments.
struct FeatureAttentionParams {
  Eigen::MatrixXd w_desc;
  Eigen::MatrixXd w_keys;
};

struct AttendedFeatures {
  Eigen::VectorXd out;
  Eigen::VectorXd weights_desc;
  Eigen::VectorXd weights_keys;
};

// Numerically stable softmax (max subtracted).
Eigen::VectorXd softmax(const Eigen::VectorXd& z);

// out = x with descriptors -> x * softmax(W_desc x), keys -> x * softmax(W_keys x).
AttendedFeatures attend_features_cached(const Eigen::VectorXd& x, const SegmentSpec& spec,
                                        const FeatureAttentionParams& p);
Eigen::VectorXd attend_features(const DrugFeatureVector& v, const SegmentSpec& spec,
                                const FeatureAttentionParams& p);

// Accumulates dL/dW_desc and dL/dW_keys into grad given dL/dout.
void attend_features_backward(const Eigen::VectorXd& x, const SegmentSpec& spec,
                              const FeatureAttentionParams& p, const AttendedFeatures& cache,
                              const Eigen::VectorXd& d_out, FeatureAttentionParams& grad);

}  // namespace xadr
