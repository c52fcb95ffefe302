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
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xadr/dataset.hpp"
#include "xadr/features.hpp"
#include "xadr/kg.hpp"
#include "xadr/model.hpp"

namespace xadr {

struct SyntheticConfig {
  int n_drugs = 200;
  int n_proteins = 120;
  std::uint64_t seed = 0;
  int n_phenotypes = 20;
  int n_diseases = 8;
  // Targets are drawn with weight 1 / (k + 1)^popularity for protein k.
  double popularity = 1.0;
  SegmentSpec segments;
};

// Organ i (zero-based) is positive iff the drugs share a protein k with
// k mod 15 == i.
LabelVector planted_labels(const std::vector<int>& targets_a, const std::vector<int>& targets_b);

struct SyntheticData {
  KnowledgeGraph graph;
  FeatureTable features;
  AdrRecords records;
  PairSet synergy;
  std::map<std::string, std::vector<int>> targets;  // drug -> protein indices
  nlohmann::json ground_truth;
};

SyntheticData gen_synthetic(const SyntheticConfig& cfg);

// edges.tsv, features.tsv, adr_records.tsv, synergy.tsv, ground_truth.json
void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

// Six-entity graph (three drugs, two proteins, one phenotype) with a small
// model and a three-triplet batch for gradient verification.
struct TinyProblem {
  KnowledgeGraph graph;
  FeatureTable features;
  Model model;
  std::vector<Triplet> batch;
};
TinyProblem tiny_problem(std::uint64_t seed, ModelVariant variant = ModelVariant::Full);

std::string synthetic_drug_id(int i);
std::string synthetic_protein_id(int k);

}  // namespace xadr
