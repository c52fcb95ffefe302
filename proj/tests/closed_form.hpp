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

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "test_util.hpp"
#include "xadr/model.hpp"

namespace xadr::testing {

using Mask = ForwardOptions::AdrMask;

inline ForwardOptions mask(Mask m) {
  ForwardOptions o;
  o.adr_mask = m;
  return o;
}

inline std::vector<char> hidden_edges(const KnowledgeGraph& g, int p, int q, Mask m) {
  std::vector<char> out(g.num_edges(), 0);
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    const auto& e = g.edges()[i];
    if (m == Mask::None || !g.catalog().is_adr_channel(e.relation)) continue;
    const bool touches = e.head == p || e.head == q || e.tail == p || e.tail == q;
    const bool pair = (e.head == p && e.tail == q) || (e.head == q && e.tail == p);
    out[i] = m == Mask::Pair ? pair : touches;
  }
  return out;
}

inline oracle::Vec to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Deterministic, moderately scaled values for every tensor.
inline void hand_set(Model& m) {
  int t = 0;
  m.params.for_each([&](const std::string&, Eigen::MatrixXd& w) {
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = 0.6 * std::sin(1.3 * static_cast<double>(i) + 0.7 * t) + 0.05 * (t % 3);
    }
    ++t;
  });
}

struct ThreeEntity {
  KnowledgeGraph g;
  Model model;
  Eigen::VectorXd x0, x1;
};

// Two drugs sharing one protein, one layer, width 2, hand-set parameters.
inline ThreeEntity three_entity() {
  const auto base = testing::graph_from_tsv(
      "D0\ttarget\tP0\tdrug\tgene/protein\n"
      "P0\ttarget\tD0\tgene/protein\tdrug\n"
      "D1\tenzyme\tP0\tdrug\tgene/protein\n"
      "P0\tenzyme\tD1\tgene/protein\tdrug\n");
  const std::vector<Triplet> train{positive("D0", "D1", {2, 5})};
  ModelConfig cfg;
  cfg.layers = 1;
  cfg.hidden = 2;
  cfg.organ_dim = 2;
  cfg.heads = 2;
  cfg.segments = {2, 2, 2, 2};
  ThreeEntity t{finalize_for_training(base, train), Model::create(cfg, 0), {}, {}};
  hand_set(t.model);
  t.x0.resize(8);
  t.x1.resize(8);
  t.x0 << 0.7, -1.2, 1, 0, 1, 1, 0, 1;
  t.x1 << -0.4, 0.9, 0, 1, 1, 0, 1, 1;
  return t;
}

}  // namespace xadr::testing
