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

#include "xadr/pipeline.hpp"
#include "xadr/synthetic.hpp"

namespace xadr::testing {

// Planted-signal dataset in mode R with the training graph finalized.
struct Planted {
  SyntheticData data;
  DatasetSplit split;
  KnowledgeGraph graph;
};

inline Planted planted(std::uint64_t seed, int n_drugs = 200, int n_proteins = 120) {
  SyntheticConfig sc;
  sc.n_drugs = n_drugs;
  sc.n_proteins = n_proteins;
  sc.seed = seed;
  auto data = gen_synthetic(sc);
  auto split = make_split(data.records, data.synergy, DatasetMode::R,
                          drug_pool(data.graph, data.features), {8, 1, 1}, seed);
  auto graph = finalize_for_training(data.graph, split.train);
  return {std::move(data), std::move(split), std::move(graph)};
}

}  // namespace xadr::testing
