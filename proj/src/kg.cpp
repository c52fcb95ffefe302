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

#include "xadr/kg.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace xadr {

namespace {

struct BaseRow {
  const char* name;
  EntityKind source;
  EntityKind target;
  std::array<bool, 4> membership;  // basic, abl1, abl2, abl3
};

using K = EntityKind;

// clang-format off
const BaseRow kBaseRows[] = {
    {"ppi",               K::GeneProtein,     K::GeneProtein,     {1, 1, 0, 1}},
    {"associated with",   K::EffectPhenotype, K::GeneProtein,     {1, 1, 0, 0}},
    {"associated with",   K::GeneProtein,     K::EffectPhenotype, {1, 1, 0, 0}},
    {"parent-child",      K::EffectPhenotype, K::EffectPhenotype, {1, 0, 0, 0}},
    {"target",            K::Drug,            K::GeneProtein,     {1, 1, 0, 1}},
    {"target",            K::GeneProtein,     K::Drug,            {1, 1, 0, 1}},
    {"enzyme",            K::Drug,            K::GeneProtein,     {1, 1, 0, 1}},
    {"enzyme",            K::GeneProtein,     K::Drug,            {1, 1, 0, 1}},
    {"transporter",       K::Drug,            K::GeneProtein,     {1, 1, 0, 1}},
    {"transporter",       K::GeneProtein,     K::Drug,            {1, 1, 0, 1}},
    {"carrier",           K::Drug,            K::GeneProtein,     {1, 1, 0, 1}},
    {"carrier",           K::GeneProtein,     K::Drug,            {1, 1, 0, 1}},
    {"side effect",       K::Drug,            K::EffectPhenotype, {1, 1, 1, 0}},
    {"side effect",       K::EffectPhenotype, K::Drug,            {1, 1, 1, 0}},
    {"associated with",   K::Disease,         K::GeneProtein,     {1, 0, 0, 1}},
    {"associated with",   K::GeneProtein,     K::Disease,         {1, 0, 0, 1}},
    {"phenotype present", K::Disease,         K::EffectPhenotype, {1, 0, 1, 0}},
    {"phenotype present", K::EffectPhenotype, K::Disease,         {1, 0, 1, 0}},
    {"phenotype absent",  K::Disease,         K::EffectPhenotype, {1, 0, 1, 0}},
    {"phenotype absent",  K::EffectPhenotype, K::Disease,         {1, 0, 1, 0}},
    {"contraindication",  K::Disease,         K::Drug,            {1, 0, 1, 1}},
    {"contraindication",  K::Drug,            K::Disease,         {1, 0, 1, 1}},
    {"indication",        K::Disease,         K::Drug,            {1, 0, 1, 1}},
    {"indication",        K::Drug,            K::Disease,         {1, 0, 1, 1}},
    {"off-label use",     K::Disease,         K::Drug,            {1, 0, 1, 1}},
    {"off-label use",     K::Drug,            K::Disease,         {1, 0, 1, 1}},
    {"parent-child",      K::Disease,         K::Disease,         {1, 0, 1, 1}},
};
// clang-format on

const char* const kVariantKeys[] = {"basic", "abl1", "abl2", "abl3"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_synergy_name(std::string_view name) {
  return lower(name).find("synerg") != std::string::npos;
}

std::optional<EntityKind> removed_kind(KGVariant v) {
  switch (v) {
    case KGVariant::Basic:
      return std::nullopt;
    case KGVariant::Ablation1:
      return EntityKind::Disease;
    case KGVariant::Ablation2:
      return EntityKind::GeneProtein;
    case KGVariant::Ablation3:
      return EntityKind::EffectPhenotype;
  }
  return std::nullopt;
}

}  // namespace

std::string_view kind_name(EntityKind kind) {
  switch (kind) {
    case EntityKind::Drug:
      return "drug";
    case EntityKind::GeneProtein:
      return "gene/protein";
    case EntityKind::EffectPhenotype:
      return "effect/phenotype";
    case EntityKind::Disease:
      return "disease";
  }
  return "?";
}

EntityKind parse_kind(std::string_view text) {
  const std::string t = lower(trim(std::string(text)));
  if (t == "drug") return EntityKind::Drug;
  if (t == "gene/protein" || t == "protein" || t == "gene") return EntityKind::GeneProtein;
  if (t == "effect/phenotype" || t == "phenotype" || t == "effect")
    return EntityKind::EffectPhenotype;
  if (t == "disease") return EntityKind::Disease;
  throw ValidationError("unknown entity kind '" + std::string(text) + "'");
}

std::string_view variant_name(KGVariant v) {
  return kVariantKeys[static_cast<int>(v)];
}

KGVariant parse_variant(std::string_view text) {
  const std::string t = lower(text);
  for (int i = 0; i < 4; ++i) {
    if (t == kVariantKeys[i]) return static_cast<KGVariant>(i);
  }
  if (t == "ablation1") return KGVariant::Ablation1;
  if (t == "ablation2") return KGVariant::Ablation2;
  if (t == "ablation3") return KGVariant::Ablation3;
  throw ValidationError("unknown KG variant '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// RelationCatalog

RelationCatalog RelationCatalog::builtin() {
  RelationCatalog c;
  for (const auto& row : kBaseRows) {
    c.relations_.push_back({row.name, row.source, row.target, false});
    c.membership_.push_back(row.membership);
  }
  c.num_base_ = static_cast<int>(c.relations_.size());
  c.append_derived();
  return c;
}

void RelationCatalog::append_derived() {
  for (int organ = 0; organ < kNumOrgans; ++organ) {
    relations_.push_back(
        {"adr_organ_" + std::to_string(organ + 1), EntityKind::Drug, EntityKind::Drug, false});
    membership_.push_back({true, true, true, true});
  }
  relations_.push_back({"self_loop", EntityKind::Drug, EntityKind::Drug, true});
  membership_.push_back({true, true, true, true});
}

RelationCatalog RelationCatalog::from_json(const nlohmann::json& j) {
  RelationCatalog c;
  if (!j.contains("relations") || !j["relations"].is_array()) {
    throw ValidationError("relation catalog: missing 'relations' array");
  }
  std::set<std::tuple<std::string, int, int>> seen;
  for (const auto& r : j["relations"]) {
    RelationKind rel;
    rel.name = r.at("name").get<std::string>();
    rel.source_kind = parse_kind(r.at("source").get<std::string>());
    rel.target_kind = parse_kind(r.at("target").get<std::string>());
    if (is_synergy_name(rel.name)) {
      throw ValidationError("relation catalog: synergy relation '" + rel.name +
                            "' is not permitted");
    }
    auto key = std::make_tuple(rel.name, static_cast<int>(rel.source_kind),
                               static_cast<int>(rel.target_kind));
    if (!seen.insert(key).second) {
      throw ValidationError("relation catalog: duplicate relation '" + rel.name + "'");
    }
    std::array<bool, 4> m{true, false, false, false};
    if (r.contains("variants")) {
      m = {false, false, false, false};
      for (const auto& v : r["variants"]) {
        m[static_cast<int>(parse_variant(v.get<std::string>()))] = true;
      }
    }
    c.relations_.push_back(std::move(rel));
    c.membership_.push_back(m);
  }
  c.num_base_ = static_cast<int>(c.relations_.size());
  c.append_derived();
  return c;
}

RelationCatalog RelationCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open relation catalog " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("relation catalog " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json RelationCatalog::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < num_base_; ++i) {
    nlohmann::json variants = nlohmann::json::array();
    for (int v = 0; v < 4; ++v) {
      if (membership_[i][v]) variants.push_back(kVariantKeys[v]);
    }
    rows.push_back({{"name", relations_[i].name},
                    {"source", kind_name(relations_[i].source_kind)},
                    {"target", kind_name(relations_[i].target_kind)},
                    {"variants", variants}});
  }
  return {{"relations", rows}};
}

std::optional<int> RelationCatalog::find(std::string_view name, EntityKind source,
                                         EntityKind target) const {
  for (int i = 0; i < size(); ++i) {
    const auto& r = relations_[i];
    if (r.name != name) continue;
    if (r.any_kind || (r.source_kind == source && r.target_kind == target)) return i;
  }
  return std::nullopt;
}

bool RelationCatalog::has_name(std::string_view name) const {
  return std::any_of(relations_.begin(), relations_.end(),
                     [&](const RelationKind& r) { return r.name == name; });
}

bool RelationCatalog::in_variant(int id, KGVariant v) const {
  return membership_.at(id)[static_cast<int>(v)];
}

std::string RelationCatalog::label(int id) const {
  const auto& r = relations_.at(id);
  if (r.any_kind) return r.name;
  return r.name + "\t" + std::string(kind_name(r.source_kind)) + "\t" +
         std::string(kind_name(r.target_kind));
}

// ---------------------------------------------------------------------------
// KnowledgeGraph

KnowledgeGraph::KnowledgeGraph(RelationCatalog catalog) : catalog_(std::move(catalog)) {}

int KnowledgeGraph::add_entity(const std::string& id, EntityKind kind) {
  if (auto it = index_.find(id); it != index_.end()) {
    if (entities_[it->second].kind != kind) {
      throw ValidationError("entity '" + id + "' declared as " + std::string(kind_name(kind)) +
                            " but already known as " +
                            std::string(kind_name(entities_[it->second].kind)));
    }
    return it->second;
  }
  const int idx = num_entities();
  entities_.push_back({id, kind});
  index_.emplace(id, idx);
  in_.emplace_back();
  out_.emplace_back();
  return idx;
}

void KnowledgeGraph::add_edge(int head, int relation, int tail) {
  if (head < 0 || head >= num_entities() || tail < 0 || tail >= num_entities()) {
    throw ValidationError("edge references a missing entity");
  }
  if (relation < 0 || relation >= catalog_.size()) {
    throw ValidationError("edge references a missing relation");
  }
  const auto& rel = catalog_.at(relation);
  if (rel.any_kind) {
    if (head != tail) throw ValidationError("self-loop relation must connect an entity to itself");
  } else if (entities_[head].kind != rel.source_kind || entities_[tail].kind != rel.target_kind) {
    throw ValidationError("edge kinds do not match relation '" + rel.name + "'");
  }
  const int id = static_cast<int>(edges_.size());
  edges_.push_back({head, relation, tail});
  out_[head].push_back(id);
  in_[tail].push_back(id);
}

std::optional<int> KnowledgeGraph::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int KnowledgeGraph::index_of(std::string_view id) const {
  auto idx = find(id);
  if (!idx) throw ValidationError("entity '" + std::string(id) + "' is not in the graph");
  return *idx;
}

std::vector<std::pair<int, std::size_t>> KnowledgeGraph::relation_counts() const {
  std::vector<std::size_t> counts(catalog_.size(), 0);
  for (const auto& e : edges_) ++counts[e.relation];
  std::vector<std::pair<int, std::size_t>> out;
  for (int r = 0; r < catalog_.size(); ++r) {
    if (counts[r] > 0) out.emplace_back(r, counts[r]);
  }
  return out;
}

bool KnowledgeGraph::has_self_loop(int e) const {
  const int loop = catalog_.self_loop();
  for (int id : in_[e]) {
    if (edges_[id].relation == loop) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Loading and transforms

KnowledgeGraph load_edges(std::istream& in, const RelationCatalog& catalog) {
  KnowledgeGraph g(catalog);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    auto f = split(line, '\t');
    if (!header_seen) {
      header_seen = true;
      if (!f.empty() && trim(f[0]) == "head_id") continue;
      throw ValidationError("line " + std::to_string(line_no) +
                            ": expected header 'head_id\trelation\ttail_id\thead_kind\ttail_kind'");
    }
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (f.size() != 5) {
      throw ValidationError(where + "malformed row, expected 5 tab-separated fields, got " +
                            std::to_string(f.size()));
    }
    for (auto& s : f) s = trim(s);
    if (f[0].empty() || f[1].empty() || f[2].empty()) {
      throw ValidationError(where + "malformed row, empty field");
    }
    if (is_synergy_name(f[1])) {
      throw ValidationError(where + "synergy relation '" + f[1] +
                            "' is not allowed in the knowledge graph");
    }
    if (!catalog.has_name(f[1])) {
      throw ValidationError(where + "unknown relation '" + f[1] + "'");
    }
    EntityKind hk, tk;
    try {
      hk = parse_kind(f[3]);
      tk = parse_kind(f[4]);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    auto rel = catalog.find(f[1], hk, tk);
    if (!rel) {
      throw ValidationError(where + "kind mismatch: relation '" + f[1] + "' has no " +
                            std::string(kind_name(hk)) + " -> " + std::string(kind_name(tk)) +
                            " form");
    }
    try {
      const int h = g.add_entity(f[0], hk);
      const int t = g.add_entity(f[2], tk);
      g.add_edge(h, *rel, t);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  return g;
}

KnowledgeGraph load_edges(const std::filesystem::path& path, const RelationCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open edge file " + path.string());
  try {
    return load_edges(in, catalog);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_edges(const KnowledgeGraph& g, std::ostream& out) {
  out << "head_id\trelation\ttail_id\thead_kind\ttail_kind\n";
  for (const auto& e : g.edges()) {
    const auto& h = g.entity(e.head);
    const auto& t = g.entity(e.tail);
    out << h.id << '\t' << g.catalog().at(e.relation).name << '\t' << t.id << '\t'
        << kind_name(h.kind) << '\t' << kind_name(t.kind) << '\n';
  }
}

KnowledgeGraph apply_ablation(const KnowledgeGraph& g, KGVariant variant) {
  const auto drop = removed_kind(variant);
  const auto& cat = g.catalog();
  KnowledgeGraph out(cat);
  std::vector<int> remap(g.num_entities(), -1);
  for (int i = 0; i < g.num_entities(); ++i) {
    const auto& e = g.entity(i);
    if (drop && e.kind == *drop) continue;
    remap[i] = out.add_entity(e.id, e.kind);
  }
  for (const auto& e : g.edges()) {
    if (!cat.in_variant(e.relation, variant)) continue;
    if (remap[e.head] < 0 || remap[e.tail] < 0) continue;
    out.add_edge(remap[e.head], e.relation, remap[e.tail]);
  }
  return out;
}

KnowledgeGraph finalize_for_training(const KnowledgeGraph& g, std::span<const Triplet> train) {
  KnowledgeGraph out = g;
  const auto& cat = g.catalog();
  for (const auto& t : train) {
    auto p = g.find(t.p);
    auto q = g.find(t.q);
    if (!p) throw ValidationError("training triplet references unknown drug '" + t.p + "'");
    if (!q) throw ValidationError("training triplet references unknown drug '" + t.q + "'");
    for (int organ = 0; organ < kNumOrgans; ++organ) {
      if (!t.labels.bits[organ]) continue;
      out.add_edge(*p, cat.adr_channel(organ), *q);
      out.add_edge(*q, cat.adr_channel(organ), *p);
    }
  }
  for (int e = 0; e < out.num_entities(); ++e) {
    if (!out.has_self_loop(e)) out.add_edge(e, cat.self_loop(), e);
  }
  return out;
}

}  // namespace xadr
