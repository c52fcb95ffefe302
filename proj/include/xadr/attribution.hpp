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

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "xadr/features.hpp"
#include "xadr/kg.hpp"
#include "xadr/model.hpp"

namespace xadr {

struct ImportanceEntry {
  std::string entity_id;
  EntityKind kind = EntityKind::Drug;
  double score = 0.0;
  std::vector<double> per_layer;  // layers 1..L, summed over both directions
};

struct ImportanceRanking {
  std::string p, q;
  std::vector<ImportanceEntry> entries;  // descending by score
};

// score(e) = sum over both flows and layers l of ||h_e^l|| times the mean
// relation attention over the distinct relations on e's active in-edges at
// layer l. Query drugs and zero scores are dropped; `kind` filters before
// truncation to `top_k`.
ImportanceRanking rank_entities(const Model& model, const KnowledgeGraph& g,
                                const FeatureTable& features, const std::string& p,
                                const std::string& q, int top_k,
                                std::optional<EntityKind> kind = std::nullopt);

// Edges of `g` whose endpoints are both ranked, self-loops excluded.
std::vector<Edge> induced_edges(const KnowledgeGraph& g, const ImportanceRanking& ranking);

void write_ranking(const ImportanceRanking& r, std::ostream& out);
void write_induced_edges(const KnowledgeGraph& g, const std::vector<Edge>& edges,
                         std::ostream& out);

}  // namespace xadr
