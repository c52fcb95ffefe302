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

#include "xadr/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <unordered_set>

namespace xadr {

namespace {

void accumulate_flow(const FlowTrace& flow, const KnowledgeGraph& g,
                     std::vector<std::vector<double>>& per_layer) {
  const auto& edges = g.edges();
  std::vector<int> kinds;
  for (std::size_t l = 1; l < flow.layers.size(); ++l) {
    const FlowLayer& prev = flow.layers[l - 1];
    const FlowLayer& cur = flow.layers[l];
    const Eigen::VectorXd& alpha = flow.attention[l - 1].alpha;
    for (std::size_t s = 0; s < cur.support.size(); ++s) {
      const int e = cur.support[s];
      kinds.clear();
      for (int id : g.in_edges(e)) {
        if (flow.masked[id] || prev.slot[edges[id].head] < 0) continue;
        kinds.push_back(edges[id].relation);
      }
      if (kinds.empty()) continue;
      std::sort(kinds.begin(), kinds.end());
      kinds.erase(std::unique(kinds.begin(), kinds.end()), kinds.end());
      double mean_alpha = 0.0;
      for (int r : kinds) mean_alpha += alpha[r];
      mean_alpha /= static_cast<double>(kinds.size());
      per_layer[e][l - 1] += cur.state.row(static_cast<Eigen::Index>(s)).norm() * mean_alpha;
    }
  }
}

}  // namespace

ImportanceRanking rank_entities(const Model& model, const KnowledgeGraph& g,
                                const FeatureTable& features, const std::string& p,
                                const std::string& q, int top_k, std::optional<EntityKind> kind) {
  if (top_k < 1) throw ValidationError("top_k must be >= 1");
  if (g.catalog().size() != model.config.num_relations) {
    throw ValidationError("checkpoint expects " + std::to_string(model.config.num_relations) +
                          " relations, graph catalog has " + std::to_string(g.catalog().size()));
  }
  const auto ip = g.find(p), iq = g.find(q);
  if (!ip) throw ValidationError("drug '" + p + "' is not in the graph");
  if (!iq) throw ValidationError("drug '" + q + "' is not in the graph");
  if (!features.contains(p)) throw ValidationError("no features for drug '" + p + "'");
  if (!features.contains(q)) throw ValidationError("no features for drug '" + q + "'");

  const auto fwd =
      forward_pair(model, g, *ip, *iq, features.at(p).values, features.at(q).values);
  const auto L = static_cast<std::size_t>(model.config.layers);
  std::vector<std::vector<double>> per_layer(g.num_entities(), std::vector<double>(L, 0.0));
  accumulate_flow(fwd.flow_pq, g, per_layer);
  accumulate_flow(fwd.flow_qp, g, per_layer);

  ImportanceRanking r{p, q, {}};
  for (int e = 0; e < g.num_entities(); ++e) {
    if (e == *ip || e == *iq) continue;
    const auto& ent = g.entity(e);
    if (kind && ent.kind != *kind) continue;
    double score = 0.0;
    for (double v : per_layer[e]) score += v;
    if (!(score > 0.0)) continue;
    r.entries.push_back({ent.id, ent.kind, score, per_layer[e]});
  }
  std::stable_sort(r.entries.begin(), r.entries.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  if (r.entries.size() > static_cast<std::size_t>(top_k)) r.entries.resize(top_k);
  return r;
}

std::vector<Edge> induced_edges(const KnowledgeGraph& g, const ImportanceRanking& ranking) {
  std::unordered_set<int> keep;
  for (const auto& e : ranking.entries) keep.insert(g.index_of(e.entity_id));
  std::vector<Edge> out;
  for (const auto& e : g.edges()) {
    if (e.head != e.tail && keep.contains(e.head) && keep.contains(e.tail)) out.push_back(e);
  }
  return out;
}

void write_ranking(const ImportanceRanking& r, std::ostream& out) {
  out << "# pair=" << r.p << ',' << r.q << '\n';
  out << "rank\tentity_id\tkind\tscore";
  const std::size_t L = r.entries.empty() ? 0 : r.entries.front().per_layer.size();
  for (std::size_t l = 1; l <= L; ++l) out << "\tlayer" << l;
  out << '\n' << std::setprecision(10);
  int rank = 0;
  for (const auto& e : r.entries) {
    out << ++rank << '\t' << e.entity_id << '\t' << kind_name(e.kind) << '\t' << e.score;
    for (double v : e.per_layer) out << '\t' << v;
    out << '\n';
  }
}

void write_induced_edges(const KnowledgeGraph& g, const std::vector<Edge>& edges,
                         std::ostream& out) {
  out << "head_id\trelation\ttail_id\n";
  for (const auto& e : edges) {
    out << g.entity(e.head).id << '\t' << g.catalog().at(e.relation).name << '\t'
        << g.entity(e.tail).id << '\n';
  }
}

}  // namespace xadr
