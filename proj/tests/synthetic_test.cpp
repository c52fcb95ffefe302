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

#include <set>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "xadr/synthetic.hpp"

namespace xadr {
namespace {

SyntheticConfig small(std::uint64_t seed) {
  SyntheticConfig c;
  c.n_drugs = 40;
  c.n_proteins = 30;
  c.seed = seed;
  return c;
}

TEST(PlantedLabels, SharedProteinSetsItsOrgan) {
  const auto lv = planted_labels({17, 4}, {17, 9});
  for (int i = 0; i < kNumOrgans; ++i) EXPECT_EQ(lv.bits[i], i == 2) << i;
  EXPECT_FALSE(planted_labels({1, 2}, {3, 4}).any());
  EXPECT_FALSE(planted_labels({}, {3}).any());
  // Proteins 0 and 15 share an organ class but only a shared protein counts.
  EXPECT_FALSE(planted_labels({0}, {15}).any());
  const auto two = planted_labels({0, 16}, {16, 0});
  EXPECT_EQ(two.bits[0], 1);
  EXPECT_EQ(two.bits[1], 1);
}

TEST(GenSynthetic, RecordsFollowTheRule) {
  const auto d = gen_synthetic(small(3));
  ASSERT_EQ(d.targets.size(), 40u);
  std::size_t labeled = 0;
  for (auto a = d.targets.begin(); a != d.targets.end(); ++a) {
    for (auto b = std::next(a); b != d.targets.end(); ++b) {
      const auto expect = planted_labels(a->second, b->second);
      const auto it = d.records.find(DrugPair::canonical(a->first, b->first));
      if (expect.any()) {
        ASSERT_NE(it, d.records.end());
        EXPECT_EQ(it->second.bits, expect.bits);
        ++labeled;
      } else {
        EXPECT_EQ(it, d.records.end());
      }
    }
  }
  EXPECT_EQ(labeled, d.records.size());
  EXPECT_GT(labeled, 0u);
}

TEST(GenSynthetic, GraphAndFeaturesConsistent) {
  const auto d = gen_synthetic(small(4));
  for (const auto& [drug, t] : d.targets) {
    ASSERT_TRUE(d.features.contains(drug));
    EXPECT_GE(t.size(), 1u);
    EXPECT_LE(t.size(), 3u);
    const int self = d.graph.index_of(drug);
    for (int k : t) {
      const int prot = d.graph.index_of(synthetic_protein_id(k));
      bool found = false;
      for (const auto& e : d.graph.edges()) found |= e.head == self && e.tail == prot;
      EXPECT_TRUE(found) << drug << " -> " << k;
    }
  }
  for (const auto& pair : d.synergy) EXPECT_FALSE(d.records.contains(pair));
  EXPECT_LE(d.synergy.size(), d.records.size());
  EXPECT_EQ(d.ground_truth["n_records"], d.records.size());
}

TEST(GenSynthetic, SameSeedSameFiles) {
  const auto a = testing::scratch_dir("synth_a");
  const auto b = testing::scratch_dir("synth_b");
  const auto c = testing::scratch_dir("synth_c");
  write_synthetic(gen_synthetic(small(5)), a);
  write_synthetic(gen_synthetic(small(5)), b);
  write_synthetic(gen_synthetic(small(6)), c);
  bool any_diff = false;
  for (const char* f :
       {"edges.tsv", "features.tsv", "adr_records.tsv", "synergy.tsv", "ground_truth.json"}) {
    const auto bytes = testing::read_bytes(a / f);
    EXPECT_FALSE(bytes.empty()) << f;
    EXPECT_EQ(bytes, testing::read_bytes(b / f)) << f;
    any_diff |= bytes != testing::read_bytes(c / f);
  }
  EXPECT_TRUE(any_diff);
}

TEST(GenSynthetic, WrittenFilesLoadBack) {
  const auto dir = testing::scratch_dir("synth_load");
  const auto d = gen_synthetic(small(7));
  write_synthetic(d, dir);
  EXPECT_EQ(load_adr_records(dir / "adr_records.tsv"), d.records);
  EXPECT_EQ(load_synergy(dir / "synergy.tsv"), d.synergy);
  EXPECT_EQ(load_features(dir / "features.tsv").size(), d.features.size());
  EXPECT_EQ(load_edges(dir / "edges.tsv", RelationCatalog::builtin()).num_edges(),
            d.graph.num_edges());
}

TEST(GenSynthetic, Validation) {
  auto c = small(1);
  c.n_drugs = 9;
  EXPECT_THROW(gen_synthetic(c), ValidationError);
  c = small(1);
  c.n_proteins = 0;
  EXPECT_THROW(gen_synthetic(c), ValidationError);
  c = small(1);
  c.n_diseases = -1;
  EXPECT_THROW(gen_synthetic(c), ValidationError);
  c = small(1);
  c.segments.path_fp = 14;
  EXPECT_THROW(gen_synthetic(c), ValidationError);
  c = small(1);
  c.n_phenotypes = 0;
  c.n_diseases = 0;
  EXPECT_NO_THROW(gen_synthetic(c));
}

TEST(Ids, Padded) {
  EXPECT_EQ(synthetic_drug_id(7), "D0007");
  EXPECT_EQ(synthetic_protein_id(123), "P0123");
}

}  // namespace
}  // namespace xadr
