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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xadr/dataset.hpp"
#include "xadr/kg.hpp"
#include "xadr/metrics.hpp"
#include "xadr/model.hpp"
#include "xadr/synthetic.hpp"
#include "xadr/train.hpp"

namespace xadr {

struct RunPaths {
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path adr_records;
  std::filesystem::path synergy;
  std::filesystem::path relations;     // optional catalog override
  std::filesystem::path assoc_matrix;  // required by the fixed-matrix variant
  std::filesystem::path out_dir = "xadr_run";
};

struct RunConfig {
  RunPaths paths;
  bool synthetic = false;
  int synthetic_drugs = 200;
  int synthetic_proteins = 120;
  KGVariant kg_variant = KGVariant::Basic;
  DatasetMode mode = DatasetMode::R;
  SplitRatios ratios{8, 1, 1};
  // Evaluate on the validation drugs and select on the test drugs.
  bool swap_valid_test = false;
  std::uint64_t seed = 0;  // drives data generation, splitting, init and shuffling
  ModelConfig model;
  TrainConfig train;
  std::vector<std::pair<std::string, std::string>> explain_pairs;
  int explain_top_k = 8;

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

RunConfig load_run_config(const std::filesystem::path& path);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// Restricts records and synergy pairs to `pool`, then samples, partitions and
// balances.
DatasetSplit make_split(const AdrRecords& records, const PairSet& synergy, DatasetMode mode,
                        const std::vector<std::string>& pool, SplitRatios ratios,
                        std::uint64_t seed);

struct RunSummary {
  nlohmann::json manifest;
  MetricsReport test_metrics;
  TrainResult training;
};

// build-kg -> build-dataset -> train -> evaluate -> explain. Every stage
// failure is rethrown as StageError naming the stage.
RunSummary run_pipeline(const RunConfig& cfg);

// Drug entities of `g` that have feature rows, in graph order.
std::vector<std::string> drug_pool(const KnowledgeGraph& g, const FeatureTable& features);

}  // namespace xadr
