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

#include "xadr/pipeline.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include "xadr/attribution.hpp"
#include "xadr/metrics.hpp"

namespace xadr {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (!synthetic) {
    const std::pair<const char*, const fs::path*> required[] = {
        {"edges", &paths.edges},
        {"features", &paths.features},
        {"adr_records", &paths.adr_records}};
    for (const auto& [name, p] : required) {
      if (p->empty()) throw ValidationError(std::string("missing input path: ") + name);
      if (!fs::exists(*p)) throw ValidationError("input file not found: " + p->string());
    }
    if (mode == DatasetMode::D) {
      if (paths.synergy.empty()) throw ValidationError("mode d needs a synergy file");
      if (!fs::exists(paths.synergy)) {
        throw ValidationError("input file not found: " + paths.synergy.string());
      }
    }
  } else if (synthetic_drugs < 10 || synthetic_proteins < 1) {
    throw ValidationError("synthetic runs need >= 10 drugs and >= 1 protein");
  }
  if (model.variant == ModelVariant::Ablated1FixedMatrix && paths.assoc_matrix.empty()) {
    throw ValidationError("variant ablated1 needs an assoc_matrix path");
  }
  if (explain_top_k < 1) throw ValidationError("explain_top_k must be >= 1");
  if (paths.out_dir.empty()) throw ValidationError("out_dir must be set");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [p, q] : explain_pairs) pairs.push_back({p, q});
  return {{"paths",
           {{"edges", paths.edges.string()},
            {"features", paths.features.string()},
            {"adr_records", paths.adr_records.string()},
            {"synergy", paths.synergy.string()},
            {"relations", paths.relations.string()},
            {"assoc_matrix", paths.assoc_matrix.string()},
            {"out_dir", paths.out_dir.string()}}},
          {"synthetic", synthetic},
          {"synthetic_drugs", synthetic_drugs},
          {"synthetic_proteins", synthetic_proteins},
          {"kg_variant", std::string(variant_name(kg_variant))},
          {"mode", std::string(mode_name(mode))},
          {"ratios", ratios},
          {"swap_valid_test", swap_valid_test},
          {"seed", seed},
          {"model", model.to_json()},
          {"train", train.to_json()},
          {"explain_pairs", pairs},
          {"explain_top_k", explain_top_k}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      const auto path = [&](const char* key, fs::path& dst) {
        if (p.contains(key)) dst = p.at(key).get<std::string>();
      };
      path("edges", c.paths.edges);
      path("features", c.paths.features);
      path("adr_records", c.paths.adr_records);
      path("synergy", c.paths.synergy);
      path("relations", c.paths.relations);
      path("assoc_matrix", c.paths.assoc_matrix);
      path("out_dir", c.paths.out_dir);
    }
    c.synthetic = j.value("synthetic", c.synthetic);
    c.synthetic_drugs = j.value("synthetic_drugs", c.synthetic_drugs);
    c.synthetic_proteins = j.value("synthetic_proteins", c.synthetic_proteins);
    if (j.contains("kg_variant")) c.kg_variant = parse_variant(j.at("kg_variant").get<std::string>());
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    c.ratios = j.value("ratios", c.ratios);
    c.swap_valid_test = j.value("swap_valid_test", c.swap_valid_test);
    c.seed = j.value("seed", c.seed);
    if (j.contains("model")) c.model = ModelConfig::from_json(j.at("model"));
    if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
    if (j.contains("explain_pairs")) {
      for (const auto& pq : j.at("explain_pairs")) {
        c.explain_pairs.emplace_back(pq.at(0).get<std::string>(), pq.at(1).get<std::string>());
      }
    }
    c.explain_top_k = j.value("explain_top_k", c.explain_top_k);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

std::vector<std::string> drug_pool(const KnowledgeGraph& g, const FeatureTable& features) {
  std::vector<std::string> pool;
  for (const auto& e : g.entities()) {
    if (e.kind == EntityKind::Drug && features.contains(e.id)) pool.push_back(e.id);
  }
  return pool;
}

DatasetSplit make_split(const AdrRecords& records, const PairSet& synergy, DatasetMode mode,
                        const std::vector<std::string>& pool, SplitRatios ratios,
                        std::uint64_t seed) {
  // Records naming drugs outside the pool (e.g. removed by ablation) are dropped.
  std::set<std::string> in_pool(pool.begin(), pool.end());
  AdrRecords kept;
  for (const auto& [pair, lv] : records) {
    if (in_pool.contains(pair.first) && in_pool.contains(pair.second)) kept.emplace(pair, lv);
  }
  PairSet syn;
  for (const auto& pair : synergy) {
    if (in_pool.contains(pair.first) && in_pool.contains(pair.second)) syn.insert(pair);
  }
  const auto samples = build_samples(kept, syn, mode, pool, seed);
  return assemble_split(samples, split_drugs(pool, ratios, seed), mode, seed);
}

namespace {

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw StageError(std::string("stage ") + name + " failed: " + e.what());
  }
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw StageError("cannot write " + p.string());
  return out;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

}  // namespace

RunSummary run_pipeline(const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  cfg.validate();
  const fs::path out = cfg.paths.out_dir;
  fs::create_directories(out);
  RunSummary summary;
  nlohmann::json outputs = nlohmann::json::array();
  const auto emit = [&](const fs::path& rel) { outputs.push_back(rel.generic_string()); };

  if (cfg.synthetic) {
    stage("gen-synthetic", [&] {
      SyntheticConfig sc;
      sc.n_drugs = cfg.synthetic_drugs;
      sc.n_proteins = cfg.synthetic_proteins;
      sc.seed = cfg.seed;
      sc.segments = cfg.model.segments;
      const auto data = gen_synthetic(sc);
      write_synthetic(data, out / "inputs");
      cfg.paths.edges = out / "inputs" / "edges.tsv";
      cfg.paths.features = out / "inputs" / "features.tsv";
      cfg.paths.adr_records = out / "inputs" / "adr_records.tsv";
      cfg.paths.synergy = out / "inputs" / "synergy.tsv";
      return 0;
    });
  }

  const FeatureTable features = stage("load-features", [&] {
    auto t = load_features(cfg.paths.features);
    if (t.spec() != cfg.model.segments) cfg.model.segments = t.spec();
    return t;
  });

  // Resolved config goes to disk before any training stage can fail.
  write_json(out / "config.json", cfg.to_json());
  emit("config.json");

  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [key, p] :
       std::initializer_list<std::pair<const char*, fs::path>>{
           {"edges", cfg.paths.edges},
           {"features", cfg.paths.features},
           {"adr_records", cfg.paths.adr_records},
           {"synergy", cfg.paths.synergy},
           {"relations", cfg.paths.relations},
           {"assoc_matrix", cfg.paths.assoc_matrix}}) {
    if (p.empty() || !fs::exists(p)) continue;
    // Synthetic inputs live under out_dir; record them relative to it so the
    // manifest does not depend on where the run was placed.
    const auto shown = cfg.synthetic && key != std::string("relations") &&
                               key != std::string("assoc_matrix")
                           ? fs::relative(p, out).generic_string()
                           : p.string();
    inputs[key] = {{"path", shown}, {"sha256", sha256_file(p)}};
  }

  const auto catalog = cfg.paths.relations.empty() ? RelationCatalog::builtin()
                                                   : RelationCatalog::load(cfg.paths.relations);
  const KnowledgeGraph graph = stage("build-kg", [&] {
    auto g = apply_ablation(load_edges(cfg.paths.edges, catalog), cfg.kg_variant);
    auto f = open_out(out / "kg.tsv");
    write_edges(g, f);
    return g;
  });
  emit("kg.tsv");

  const DatasetSplit split = stage("build-dataset", [&] {
    const auto records = load_adr_records(cfg.paths.adr_records);
    const PairSet synergy = cfg.paths.synergy.empty() || !fs::exists(cfg.paths.synergy)
                                ? PairSet{}
                                : load_synergy(cfg.paths.synergy);
    auto s = make_split(records, synergy, cfg.mode, drug_pool(graph, features), cfg.ratios,
                        cfg.seed);
    if (cfg.swap_valid_test) {
      std::swap(s.valid, s.test);
      std::swap(s.drugs.valid, s.drugs.test);
    }
    for (const auto& [name, part] : {std::pair{"train.tsv", &s.train},
                                     std::pair{"valid.tsv", &s.valid},
                                     std::pair{"test.tsv", &s.test}}) {
      auto f = open_out(out / name);
      write_triplets(*part, f);
    }
    write_json(out / "split_stats.json", split_stats(s));
    return s;
  });
  for (const char* f : {"train.tsv", "valid.tsv", "test.tsv", "split_stats.json"}) emit(f);

  const KnowledgeGraph train_graph = stage("build-kg", [&] {
    auto g = finalize_for_training(graph, split.train);
    auto f = open_out(out / "train_kg.tsv");
    write_edges(g, f);
    return g;
  });
  emit("train_kg.tsv");

  summary.training = stage("train", [&] {
    std::optional<Eigen::MatrixXd> assoc;
    if (cfg.model.variant == ModelVariant::Ablated1FixedMatrix) {
      assoc = load_assoc_matrix(cfg.paths.assoc_matrix);
    }
    auto mcfg = cfg.model;
    mcfg.num_relations = catalog.size();
    TrainConfig tcfg = cfg.train;
    tcfg.seed = cfg.seed;
    auto result = train_loop(split, train_graph, features, Model::create(mcfg, cfg.seed, assoc), tcfg);
    save_checkpoint(result.best, out / "checkpoint.json");
    auto f = open_out(out / "epoch_log.tsv");
    write_epoch_log(result.log, f);
    return result;
  });
  emit("checkpoint.json");
  emit("epoch_log.tsv");

  summary.test_metrics = stage("evaluate", [&] {
    const auto pred = predict(summary.training.best, train_graph, features, split.test);
    const auto report = evaluate_scores(pred.scores, pred.truth);
    write_json(out / "metrics.json", report_to_json(report));
    auto f = open_out(out / "radar.tsv");
    write_radar_tsv(report, f);
    return report;
  });
  emit("metrics.json");
  emit("radar.tsv");

  if (!cfg.explain_pairs.empty()) {
    stage("explain", [&] {
      for (const auto& [p, q] : cfg.explain_pairs) {
        const auto ranking = rank_entities(summary.training.best, train_graph, features, p, q,
                                           cfg.explain_top_k);
        const std::string stem = "explain_" + p + "_" + q;
        auto f = open_out(out / (stem + ".tsv"));
        write_ranking(ranking, f);
        auto e = open_out(out / (stem + "_edges.tsv"));
        write_induced_edges(train_graph, induced_edges(train_graph, ranking), e);
        emit(stem + ".tsv");
        emit(stem + "_edges.tsv");
      }
      return 0;
    });
  }

  summary.manifest = {{"format", "xadr-manifest"},
                      {"version", 1},
                      {"model_variant", std::string(model_variant_name(cfg.model.variant))},
                      {"kg_variant", std::string(variant_name(cfg.kg_variant))},
                      {"mode", std::string(mode_name(cfg.mode))},
                      {"swap_valid_test", cfg.swap_valid_test},
                      {"seed", cfg.seed},
                      {"synthetic", cfg.synthetic},
                      {"inputs", inputs},
                      {"best_epoch", summary.training.best_epoch},
                      {"epochs_run", summary.training.log.size()},
                      {"outputs", outputs}};
  write_json(out / "manifest.json", summary.manifest);
  return summary;
}

}  // namespace xadr
