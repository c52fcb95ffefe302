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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "xadr/triplet.hpp"

namespace xadr {

enum class EntityKind { Drug, GeneProtein, EffectPhenotype, Disease };

inline constexpr int kNumEntityKinds = 4;

std::string_view kind_name(EntityKind kind);
// Accepts the TSV spellings ("drug", "gene/protein", "effect/phenotype",
// "disease") and the short forms "protein" and "phenotype".
EntityKind parse_kind(std::string_view text);

enum class KGVariant { Basic, Ablation1, Ablation2, Ablation3 };

std::string_view variant_name(KGVariant v);
// "basic", "abl1", "abl2", "abl3".
KGVariant parse_variant(std::string_view text);

struct RelationKind {
  std::string name;
  EntityKind source_kind = EntityKind::Drug;
  EntityKind target_kind = EntityKind::Drug;
  // Self-loops connect an entity of any kind to itself.
  bool any_kind = false;
};

// Relation table shared by every graph configuration. Ids are stable:
// base relations first (file order), then one ADR channel per organ, then
// the self-loop relation.
class RelationCatalog {
 public:
  // The 27 biomedical relation rows with their per-variant membership.
  static RelationCatalog builtin();
  static RelationCatalog from_json(const nlohmann::json& j);
  static RelationCatalog load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  int size() const { return static_cast<int>(relations_.size()); }
  int num_base() const { return num_base_; }
  const RelationKind& at(int id) const { return relations_.at(id); }

  // organ is 0-based.
  int adr_channel(int organ) const { return num_base_ + organ; }
  int self_loop() const { return num_base_ + kNumOrgans; }
  bool is_adr_channel(int id) const {
    return id >= num_base_ && id < num_base_ + kNumOrgans;
  }

  std::optional<int> find(std::string_view name, EntityKind source,
                          EntityKind target) const;
  bool has_name(std::string_view name) const;
  // ADR channels and the self-loop belong to every variant.
  bool in_variant(int id, KGVariant v) const;
  std::string label(int id) const;

 private:
  std::vector<RelationKind> relations_;
  std::vector<std::array<bool, 4>> membership_;
  int num_base_ = 0;

  void append_derived();
};

struct Entity {
  std::string id;
  EntityKind kind;
};

struct Edge {
  int head;
  int relation;
  int tail;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Typed directed multigraph. Entity indices are dense and assigned in
// first-seen order.
class KnowledgeGraph {
 public:
  explicit KnowledgeGraph(RelationCatalog catalog = RelationCatalog::builtin());

  const RelationCatalog& catalog() const { return catalog_; }

  // Returns the existing index when the id is known with the same kind.
  int add_entity(const std::string& id, EntityKind kind);
  void add_edge(int head, int relation, int tail);

  std::optional<int> find(std::string_view id) const;
  int index_of(std::string_view id) const;

  int num_entities() const { return static_cast<int>(entities_.size()); }
  std::size_t num_edges() const { return edges_.size(); }
  const Entity& entity(int i) const { return entities_.at(i); }
  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const int> in_edges(int e) const { return in_[e]; }
  std::span<const int> out_edges(int e) const { return out_[e]; }

  // Relation ids present with their edge counts, in id order.
  std::vector<std::pair<int, std::size_t>> relation_counts() const;
  bool has_self_loop(int e) const;

 private:
  RelationCatalog catalog_;
  std::vector<Entity> entities_;
  std::unordered_map<std::string, int> index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> out_;
};

// Reads `head_id relation tail_id head_kind tail_kind` rows (tab separated,
// header line required). Drug-drug synergy relations are rejected.
KnowledgeGraph load_edges(std::istream& in, const RelationCatalog& catalog);
KnowledgeGraph load_edges(const std::filesystem::path& path,
                          const RelationCatalog& catalog);
void write_edges(const KnowledgeGraph& g, std::ostream& out);

// Keeps the relation rows checked for the variant and drops the entity kind
// the variant removes.
KnowledgeGraph apply_ablation(const KnowledgeGraph& g, KGVariant variant);

// Adds ADR-channel edges (both directions) for positive labels of the given
// training triplets and one self-loop per entity.
KnowledgeGraph finalize_for_training(const KnowledgeGraph& g,
                                     std::span<const Triplet> train);

}  // namespace xadr
