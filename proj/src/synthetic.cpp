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

#include "xadr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace xadr {

namespace {

std::string padded(char prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*d", prefix, width, i);
  return buf;
}

int weighted_pick(const std::vector<double>& cumulative, Rng& rng) {
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                   static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw StageError("cannot write " + p.string());
  return out;
}

}  // namespace

std::string synthetic_drug_id(int i) { return padded('D', i, 4); }
std::string synthetic_protein_id(int k) { return padded('P', k, 4); }

LabelVector planted_labels(const std::vector<int>& a, const std::vector<int>& b) {
  LabelVector lv;
  for (int k : a) {
    if (std::find(b.begin(), b.end(), k) != b.end()) lv.bits[k % kNumOrgans] = 1;
  }
  return lv;
}

SyntheticData gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_drugs < 10) throw ValidationError("gen_synthetic needs at least 10 drugs");
  if (cfg.n_proteins < 1) throw ValidationError("gen_synthetic needs at least 1 protein");
  if (cfg.n_phenotypes < 0 || cfg.n_diseases < 0) {
    throw ValidationError("entity counts must be non-negative");
  }
  if (cfg.segments.path_fp < kNumOrgans) {
    throw ValidationError("path_fp segment must hold at least 15 bits");
  }

  SyntheticData out;
  Rng rng(cfg.seed);
  const auto& cat = out.graph.catalog();
  const auto rel = [&](const char* name, EntityKind s, EntityKind t) { return *cat.find(name, s, t); };
  using K = EntityKind;

  std::vector<int> drugs, proteins, phenotypes, diseases;
  for (int i = 0; i < cfg.n_drugs; ++i) {
    drugs.push_back(out.graph.add_entity(synthetic_drug_id(i), K::Drug));
  }
  for (int k = 0; k < cfg.n_proteins; ++k) {
    proteins.push_back(out.graph.add_entity(synthetic_protein_id(k), K::GeneProtein));
  }
  for (int i = 0; i < cfg.n_phenotypes; ++i) {
    phenotypes.push_back(out.graph.add_entity(padded('E', i, 3), K::EffectPhenotype));
  }
  for (int i = 0; i < cfg.n_diseases; ++i) {
    diseases.push_back(out.graph.add_entity(padded('X', i, 3), K::Disease));
  }
  const auto both = [&](int a, int r_ab, int b, int r_ba) {
    out.graph.add_edge(a, r_ab, b);
    out.graph.add_edge(b, r_ba, a);
  };

  std::vector<double> cumulative(cfg.n_proteins);
  double acc = 0.0;
  for (int k = 0; k < cfg.n_proteins; ++k) {
    acc += 1.0 / std::pow(k + 1.0, cfg.popularity);
    cumulative[k] = acc;
  }
  const int dp = rel("target", K::Drug, K::GeneProtein);
  const int pd = rel("target", K::GeneProtein, K::Drug);
  for (int i = 0; i < cfg.n_drugs; ++i) {
    const int want = std::min(cfg.n_proteins, 1 + static_cast<int>(rng.uniform_index(3)));
    std::vector<int> t;
    while (static_cast<int>(t.size()) < want) {
      const int k = weighted_pick(cumulative, rng);
      if (std::find(t.begin(), t.end(), k) == t.end()) t.push_back(k);
    }
    std::sort(t.begin(), t.end());
    for (int k : t) both(drugs[i], dp, proteins[k], pd);
    out.targets[synthetic_drug_id(i)] = t;
  }

  const int ppi = rel("ppi", K::GeneProtein, K::GeneProtein);
  for (int k = 0; k + 1 < cfg.n_proteins; ++k) both(proteins[k], ppi, proteins[k + 1], ppi);

  if (!phenotypes.empty()) {
    const int de = rel("side effect", K::Drug, K::EffectPhenotype);
    const int ed = rel("side effect", K::EffectPhenotype, K::Drug);
    const int ep = rel("associated with", K::EffectPhenotype, K::GeneProtein);
    const int pe = rel("associated with", K::GeneProtein, K::EffectPhenotype);
    for (int i = 0; i < cfg.n_drugs; ++i) {
      if (rng.uniform() < 0.3) {
        both(drugs[i], de, phenotypes[rng.uniform_index(phenotypes.size())], ed);
      }
    }
    for (int e : phenotypes) both(e, ep, proteins[rng.uniform_index(proteins.size())], pe);
  }
  if (!diseases.empty()) {
    const int xd = rel("indication", K::Disease, K::Drug);
    const int dx = rel("indication", K::Drug, K::Disease);
    const int xp = rel("associated with", K::Disease, K::GeneProtein);
    const int px = rel("associated with", K::GeneProtein, K::Disease);
    for (int i = 0; i < cfg.n_drugs; ++i) {
      if (rng.uniform() < 0.15) {
        both(diseases[rng.uniform_index(diseases.size())], xd, drugs[i], dx);
      }
    }
    for (int x : diseases) both(x, xp, proteins[rng.uniform_index(proteins.size())], px);
  }

  // Records: every pair whose planted label vector is non-empty.
  std::vector<DrugPair> unlabeled;
  for (int i = 0; i < cfg.n_drugs; ++i) {
    for (int j = i + 1; j < cfg.n_drugs; ++j) {
      const auto a = synthetic_drug_id(i), b = synthetic_drug_id(j);
      const auto lv = planted_labels(out.targets[a], out.targets[b]);
      if (lv.any()) {
        out.records.emplace(DrugPair::canonical(a, b), lv);
      } else {
        unlabeled.push_back(DrugPair::canonical(a, b));
      }
    }
  }
  // Synergy pairs for D mode: a seeded sample of unrecorded pairs.
  const std::size_t want_syn = std::min(out.records.size(), unlabeled.size());
  rng.shuffle(unlabeled);
  out.synergy.insert(unlabeled.begin(), unlabeled.begin() + static_cast<std::ptrdiff_t>(want_syn));

  // Features: path bits 0..14 carry the organ classes of the drug's targets,
  // a protein-specific bit follows, the rest is seeded noise.
  const SegmentSpec& s = cfg.segments;
  out.features = FeatureTable(s);
  const int path0 = s.path_offset();
  const int spare = s.path_fp - kNumOrgans;
  for (int i = 0; i < cfg.n_drugs; ++i) {
    const auto id = synthetic_drug_id(i);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(s.total());
    for (int c = 0; c < s.descriptors; ++c) v[c] = rng.normal();
    for (int c = s.keys_offset(); c < s.total(); ++c) v[c] = rng.uniform() < 0.05 ? 1.0 : 0.0;
    for (int k : out.targets[id]) {
      v[path0 + k % kNumOrgans] = 1.0;
      if (spare > 0) v[path0 + kNumOrgans + k % spare] = 1.0;
    }
    out.features.add({id, v});
  }

  nlohmann::json targets = nlohmann::json::object();
  for (const auto& [drug, t] : out.targets) {
    nlohmann::json ids = nlohmann::json::array();
    for (int k : t) ids.push_back(synthetic_protein_id(k));
    targets[drug] = ids;
  }
  out.ground_truth = {
      {"rule", "organ i (1-based) is positive iff the drugs share a protein P<k> with k mod 15 == i - 1"},
      {"seed", cfg.seed},
      {"n_drugs", cfg.n_drugs},
      {"n_proteins", cfg.n_proteins},
      {"n_phenotypes", cfg.n_phenotypes},
      {"n_diseases", cfg.n_diseases},
      {"popularity", cfg.popularity},
      {"n_records", out.records.size()},
      {"n_synergy", out.synergy.size()},
      {"targets", targets}};
  return out;
}

TinyProblem tiny_problem(std::uint64_t seed, ModelVariant variant) {
  using K = EntityKind;
  KnowledgeGraph g;
  const auto& cat = g.catalog();
  const int d0 = g.add_entity("D0", K::Drug), d1 = g.add_entity("D1", K::Drug),
            d2 = g.add_entity("D2", K::Drug);
  const int p0 = g.add_entity("P0", K::GeneProtein), p1 = g.add_entity("P1", K::GeneProtein);
  const int e0 = g.add_entity("E0", K::EffectPhenotype);
  const auto rel = [&](const char* n, K s, K t) { return *cat.find(n, s, t); };
  g.add_edge(d0, rel("target", K::Drug, K::GeneProtein), p0);
  g.add_edge(p0, rel("target", K::GeneProtein, K::Drug), d1);
  g.add_edge(d1, rel("target", K::Drug, K::GeneProtein), p0);
  g.add_edge(d2, rel("enzyme", K::Drug, K::GeneProtein), p1);
  g.add_edge(p1, rel("enzyme", K::GeneProtein, K::Drug), d2);
  g.add_edge(p0, rel("ppi", K::GeneProtein, K::GeneProtein), p1);
  g.add_edge(p1, rel("ppi", K::GeneProtein, K::GeneProtein), p0);
  g.add_edge(d0, rel("side effect", K::Drug, K::EffectPhenotype), e0);
  g.add_edge(e0, rel("side effect", K::EffectPhenotype, K::Drug), d2);

  const auto lv = [](std::initializer_list<int> organs) {
    LabelVector v;
    for (int o : organs) v.bits[o] = 1;
    return v;
  };
  const std::vector<Triplet> finalize = {
      {"D0", "D2", lv({0, 3}), Polarity::Positive, SampleSource::AdrRecord},
      {"D1", "D2", lv({2}), Polarity::Positive, SampleSource::AdrRecord}};

  ModelConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 4;
  cfg.organ_dim = 4;
  cfg.heads = 2;
  cfg.segments = {4, 4, 4, 4};
  cfg.variant = variant;
  std::optional<Eigen::MatrixXd> assoc;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  if (variant == ModelVariant::Ablated1FixedMatrix) {
    Eigen::MatrixXd m(kNumOrgans, kNumOrgans);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
    assoc = m;
  }
  TinyProblem t{finalize_for_training(g, finalize), FeatureTable(cfg.segments),
                Model::create(cfg, seed, assoc), {}};
  // Biases and ADR embeddings start at zero / tiny values; spread them so
  // every tensor is exercised away from degenerate points.
  t.model.params.for_each([&](const std::string& name, Eigen::MatrixXd& m) {
    if (name == "e_plus" || name == "e_minus" || name.rfind("b_", 0) == 0) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, 0.5);
    }
  });
  for (const char* id : {"D0", "D1", "D2"}) {
    Eigen::VectorXd v(cfg.segments.total());
    for (int i = 0; i < cfg.segments.descriptors; ++i) v[i] = rng.normal();
    for (int i = cfg.segments.descriptors; i < v.size(); ++i) v[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    t.features.add({id, v});
  }
  t.batch = {{"D0", "D1", lv({1, 3, 8}), Polarity::Positive, SampleSource::AdrRecord},
             {"D1", "D2", LabelVector{}, Polarity::Negative, SampleSource::Synergy},
             {"D0", "D2", lv({0}), Polarity::Positive, SampleSource::AdrRecord}};
  return t;
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto f = open_out(dir / "edges.tsv");
    write_edges(data.graph, f);
  }
  {
    auto f = open_out(dir / "features.tsv");
    write_features(data.features, f);
  }
  {
    auto f = open_out(dir / "adr_records.tsv");
    write_adr_records(data.records, f);
  }
  {
    auto f = open_out(dir / "synergy.tsv");
    write_synergy(data.synergy, f);
  }
  auto f = open_out(dir / "ground_truth.json");
  f << data.ground_truth.dump(2) << '\n';
}

}  // namespace xadr
