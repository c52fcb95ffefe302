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

// Runs every acceptance criterion and prints one PASS/FAIL line for each.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "closed_form.hpp"
#include "oracles.hpp"
#include "planted.hpp"
#include "test_util.hpp"
#include "xadr/metrics.hpp"
#include "xadr/pipeline.hpp"
#include "xadr/synthetic.hpp"
#include "xadr/train.hpp"

namespace xadr {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void gradient_fidelity(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t entries = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    for (auto mask : {ForwardOptions::AdrMask::Pair, ForwardOptions::AdrMask::QueryDrugs}) {
      auto t = tiny_problem(seed);
      const auto& c = t.model.config;
      o.require(c.layers == 2 && c.hidden == 4 && c.organ_dim == 4 && c.heads == 2 &&
                    t.graph.num_entities() == 6,
                "fixture shape");
      ForwardOptions opts;
      opts.adr_mask = mask;
      const auto r = gradient_check(t.model, t.graph, t.features, t.batch, seed, 1e-5, 0, opts);
      for (const auto& tc : r.tensors) {
        entries += tc.checked;
        o.require(tc.max_rel_error < 1e-4, tc.name + " seed " + std::to_string(seed));
      }
      worst = std::max(worst, r.worst());
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 60.0, "time budget");
  o.detail << "worst rel error " << worst << " over " << entries << " entries, " << secs << " s";
}

void metric_oracles(Outcome& o) {
  Rng rng(2024);
  std::size_t cases = 0;
  double worst = 0.0;
  for (int n = 1; n <= 8; ++n) {
    for (int pattern = 0; pattern < (1 << n); ++pattern) {
      std::vector<int> y(n);
      for (int i = 0; i < n; ++i) y[i] = (pattern >> i) & 1;
      const bool pos = pattern != 0, neg = pattern != (1 << n) - 1;
      for (int draw = 0; draw < 100; ++draw) {
        std::vector<double> s(n);
        for (auto& v : s) v = draw % 3 == 0 ? std::floor(rng.uniform() * 3) / 3 : rng.uniform();
        const auto r = roc_auc(s, y);
        const auto p = pr_auc(s, y);
        o.require(r.has_value() == (pos && neg), "roc definedness");
        o.require(p.has_value() == pos, "pr definedness");
        if (r) worst = std::max(worst, std::abs(*r - oracle::roc_pairs(s, y)));
        if (p) worst = std::max(worst, std::abs(*p - oracle::average_precision(s, y)));
        ++cases;
      }
    }
  }
  o.require(worst <= 1e-12, "ranking metric tolerance");

  // Confusion metrics against exact cell counts on random label matrices.
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(12));
    Eigen::MatrixXd pred(n, kNumOrgans), truth(n, kNumOrgans);
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < kNumOrgans; ++j) {
        pred(i, j) = rng.uniform() < 0.4;
        truth(i, j) = rng.uniform() < 0.3;
        tp += pred(i, j) && truth(i, j);
        fp += pred(i, j) && !truth(i, j);
        tn += !pred(i, j) && !truth(i, j);
        fn += !pred(i, j) && truth(i, j);
      }
    }
    const auto c = thresholded_metrics(pred, truth).micro;
    o.require(c.tp == tp && c.fp == fp && c.tn == tn && c.fn == fn, "confusion cells");
    const double total = static_cast<double>(tp + fp + tn + fn);
    o.require(c.accuracy() == static_cast<double>(tp + tn) / total, "accuracy");
    o.require(c.hamming_loss() == static_cast<double>(fp + fn) / total, "hamming loss");
    o.require(c.precision() == (tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0), "precision");
    o.require(c.recall() == (tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0), "recall");
  }
  o.detail << cases << " ranking cases, worst deviation " << worst;
}

void planted_learning(Outcome& o) {
  const auto data = testing::planted(10);
  ModelConfig mcfg;
  mcfg.segments = data.data.features.spec();
  TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.seed = 10;

  auto t0 = std::chrono::steady_clock::now();
  const auto full = train_loop(data.split, data.graph, data.data.features, Model::create(mcfg, 10), cfg);
  const double full_secs = seconds_since(t0);
  o.require(full.best_valid_roc_auc >= 0.90, "full model validation ROC");
  o.require(full.log.size() <= 50, "epoch budget");
  o.require(full_secs < 300.0, "time budget");

  mcfg.variant = ModelVariant::Ablated2LastLayerOnly;
  t0 = std::chrono::steady_clock::now();
  const auto abl = train_loop(data.split, data.graph, data.data.features, Model::create(mcfg, 10), cfg);
  const double abl_secs = seconds_since(t0);
  o.require(abl.best_valid_roc_auc >= 0.0 && abl.best_valid_roc_auc <= full.best_valid_roc_auc,
            "ablated2 within [0, full]");
  o.detail << "full valid ROC " << full.best_valid_roc_auc << " (best epoch " << full.best_epoch
           << ", " << full.log.size() << " epochs, " << full_secs << " s); ablated2 "
           << abl.best_valid_roc_auc << " (" << abl.log.size() << " epochs, " << abl_secs << " s)";
}

void dataset_invariants(Outcome& o) {
  std::size_t triplets = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticConfig sc;
    sc.n_drugs = 40 + static_cast<int>(seed) * 3;
    sc.n_proteins = 60;
    sc.seed = seed;
    const auto d = gen_synthetic(sc);
    const auto pool = drug_pool(d.graph, d.features);
    const auto n = pool.size();
    for (auto mode : {DatasetMode::R, DatasetMode::D}) {
      const auto s = make_split(d.records, d.synergy, mode, pool, {8, 1, 1}, seed);
      o.require(s.drugs.train.size() == n * 8 / 10, "train cut");
      o.require(s.drugs.train.size() + s.drugs.valid.size() == n * 9 / 10, "valid cut");
      std::map<std::string, int> where;
      const std::vector<std::string>* sets[3] = {&s.drugs.train, &s.drugs.valid, &s.drugs.test};
      for (int k = 0; k < 3; ++k)
        for (const auto& drug : *sets[k]) o.require(where.emplace(drug, k).second, "disjoint V");
      o.require(where.size() == n, "V sets cover the pool");
      const std::vector<Triplet>* parts[3] = {&s.train, &s.valid, &s.test};
      for (int k = 0; k < 3; ++k) {
        std::size_t pos = 0, neg = 0;
        for (const auto& t : *parts[k]) {
          o.require(where.at(t.p) == k && where.at(t.q) == k, "co-located endpoints");
          if (t.polarity == Polarity::Positive) {
            ++pos;
          } else {
            ++neg;
            if (mode == DatasetMode::R) o.require(!d.records.contains(t.pair()), "R negative");
          }
        }
        o.require(pos == neg, "1:1 balance");
        triplets += pos + neg;
      }
    }
  }
  for (std::uint64_t n = 0; n <= 200; ++n) {
    std::uint64_t brute = 0;
    for (std::uint64_t i = 0; i < n; ++i)
      for (std::uint64_t j = i + 1; j < n; ++j) ++brute;
    o.require(combination_count(n) == brute, "combination_count " + std::to_string(n));
  }
  o.require(combination_count(1376) == 946000, "combination_count(1376)");
  o.detail << "20 seeds x 2 modes, " << triplets << " triplets checked";
}

void kg_ablation(Outcome& o) {
  const auto g = testing::graph_from_tsv(oracle::one_edge_per_row());
  o.require(g.num_edges() == oracle::relation_table().size(), "one edge per row");
  for (int v = 0; v < 4; ++v) {
    std::set<std::string> expected, got;
    for (const auto& row : oracle::relation_table()) {
      if (row.columns[v]) expected.insert(std::string(row.name) + "\t" + row.source + "\t" + row.target);
    }
    const auto ablated = apply_ablation(g, static_cast<KGVariant>(v));
    for (const auto& [id, count] : ablated.relation_counts()) got.insert(ablated.catalog().label(id));
    o.require(got == expected, std::string(variant_name(static_cast<KGVariant>(v))));
    o.detail << variant_name(static_cast<KGVariant>(v)) << "=" << got.size() << " ";
  }
}

void determinism(Outcome& o) {
  const auto a = testing::scratch_dir("accept_run_a");
  const auto b = testing::scratch_dir("accept_run_b");
  const auto run = [](const fs::path& dir) {
    const std::string cmd = std::string(XADR_CLI) + " run --synthetic --seed 10 --out-dir " +
                            dir.string() + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const auto t0 = std::chrono::steady_clock::now();
  o.require(run(a) == 0, "first run exit code");
  o.require(run(b) == 0, "second run exit code");
  for (const char* f : {"metrics.json", "epoch_log.tsv"}) {
    const auto x = testing::read_bytes(a / f);
    o.require(!x.empty(), std::string(f) + " written");
    o.require(x == testing::read_bytes(b / f), std::string(f) + " identical");
  }
  o.detail << "two CLI runs in " << seconds_since(t0) << " s";
}

void closed_form(Outcome& o) {
  auto t = testing::three_entity();
  const auto& c = t.model.config;
  o.require(t.g.num_entities() == 3 && c.layers == 1 && c.hidden == 2, "fixture shape");
  const int p = t.g.index_of("D0"), q = t.g.index_of("D1");
  double worst = 0.0;
  for (auto m : {testing::Mask::None, testing::Mask::Pair, testing::Mask::QueryDrugs}) {
    const auto s = forward_pair(t.model, t.g, p, q, t.x0, t.x1, testing::mask(m)).scores();
    const auto ref = oracle::scores(t.g, t.model, p, q, testing::to_vec(t.x0),
                                    testing::to_vec(t.x1), testing::hidden_edges(t.g, p, q, m));
    for (int i = 0; i < kNumOrgans; ++i) worst = std::max(worst, std::abs(s[i] - ref[i]));
  }
  o.require(worst <= 1e-10, "score deviation");
  o.detail << "max |S - S_ref| = " << worst;
}

void significance(Outcome& o) {
  Rng rng(77);
  const auto standardized = [&](int n, double mean, double sd) {
    std::vector<double> z(n);
    for (auto& v : z) v = rng.normal();
    double m = 0.0, ss = 0.0;
    for (double v : z) m += v;
    m /= n;
    for (double v : z) ss += (v - m) * (v - m);
    const double s = std::sqrt(ss / (n - 1));
    for (auto& v : z) v = mean + sd * (v - m) / s;
    return z;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n1 = 3 + static_cast<int>(rng.uniform_index(40));
    const int n2 = 3 + static_cast<int>(rng.uniform_index(40));
    const double m1 = rng.normal(), m2 = rng.normal(), s1 = rng.uniform(0.2, 2.0),
                 s2 = rng.uniform(0.2, 2.0);
    const auto a = standardized(n1, m1, s1);
    const auto b = standardized(n2, m2, s2);
    const double pooled = std::sqrt(((n1 - 1) * s1 * s1 + (n2 - 1) * s2 * s2) / (n1 + n2 - 2));
    worst = std::max(worst, std::abs(compare_runs(a, b).cohens_d - (m1 - m2) / pooled));
  }
  o.require(worst <= 1e-9, "Cohen's d");
  const auto base = standardized(60, 0.0, 1.0);
  auto shifted = base;
  for (auto& v : shifted) v += 3.0;
  const auto r = compare_runs(shifted, base);
  o.require(r.p_value < 1e-3, "3 SD shift significance");
  o.detail << "worst d deviation " << worst << ", shift p = " << r.p_value << " (" << r.tier << ")";
}

}  // namespace
}  // namespace xadr

int main() {
  using namespace xadr;
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"gradient fidelity", gradient_fidelity}, {"metric oracles", metric_oracles},
      {"planted learning", planted_learning},   {"dataset invariants", dataset_invariants},
      {"KG ablation conformance", kg_ablation}, {"determinism", determinism},
      {"closed-form forward", closed_form},     {"significance", significance}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first
              << " (" << o.detail.str() << ")" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
