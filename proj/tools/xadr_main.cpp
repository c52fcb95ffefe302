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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "xadr/attribution.hpp"
#include "xadr/dataset.hpp"
#include "xadr/features.hpp"
#include "xadr/kg.hpp"
#include "xadr/metrics.hpp"
#include "xadr/model.hpp"
#include "xadr/pipeline.hpp"
#include "xadr/synthetic.hpp"
#include "xadr/train.hpp"

namespace fs = std::filesystem;
using namespace xadr;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw StageError("cannot write " + p.string());
  return out;
}

void write_to(const fs::path& p, const std::function<void(std::ostream&)>& fn) {
  auto out = open_out(p);
  fn(out);
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

std::pair<std::string, std::string> parse_pair(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 2 || trim(parts[0]).empty() || trim(parts[1]).empty()) {
    throw ValidationError("expected a drug pair 'A,B', got '" + text + "'");
  }
  return {trim(parts[0]), trim(parts[1])};
}

RelationCatalog catalog_from(const std::string& path) {
  return path.empty() ? RelationCatalog::builtin() : RelationCatalog::load(path);
}

// Model and optimizer flags shared by `train` and `run`; unset flags leave
// the JSON or default value alone.
struct HyperFlags {
  std::optional<int> layers, hidden, organ_dim, heads, batch_size, epochs, patience;
  std::optional<double> lr;
  std::optional<std::string> variant, gate, anchor;
  std::vector<std::string> frozen;

  void attach(CLI::App* app) {
    app->add_option("--layers", layers, "GNN layers L");
    app->add_option("--hidden", hidden, "GNN width d");
    app->add_option("--organ-dim", organ_dim, "ADR embedding width");
    app->add_option("--heads", heads, "organ attention heads");
    app->add_option("--variant", variant, "full | ablated1 | ablated2");
    app->add_option("--gate", gate, "vector | scalar");
    app->add_option("--anchor", anchor, "all | source");
    app->add_option("--batch-size", batch_size);
    app->add_option("--epochs", epochs, "maximum epochs");
    app->add_option("--patience", patience, "early-stopping patience");
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--freeze", frozen, "tensor names excluded from training");
  }

  void apply(ModelConfig& m, TrainConfig& t) const {
    if (layers) m.layers = *layers;
    if (hidden) m.hidden = *hidden;
    if (organ_dim) m.organ_dim = *organ_dim;
    if (heads) m.heads = *heads;
    if (variant) m.variant = parse_model_variant(*variant);
    if (gate) {
      if (*gate == "vector") {
        m.gate = GateKind::Vector;
      } else if (*gate == "scalar") {
        m.gate = GateKind::Scalar;
      } else {
        throw ValidationError("unknown gate '" + *gate + "'");
      }
    }
    if (anchor) {
      if (*anchor == "all") {
        m.anchor = AnchorScope::AllSupported;
      } else if (*anchor == "source") {
        m.anchor = AnchorScope::SourceOnly;
      } else {
        throw ValidationError("unknown anchor '" + *anchor + "'");
      }
    }
    if (batch_size) t.batch_size = *batch_size;
    if (epochs) t.max_epochs = *epochs;
    if (patience) t.patience = *patience;
    if (lr) t.learning_rate = *lr;
    if (!frozen.empty()) t.frozen = frozen;
    if (t.patience > t.max_epochs) t.patience = t.max_epochs;
  }
};

void print_metrics_line(const std::string& label, const MetricsReport& r) {
  const auto show = [](const std::optional<double>& v) {
    std::ostringstream s;
    if (v) {
      s << std::fixed << std::setprecision(4) << *v;
    } else {
      s << "n/a";
    }
    return s.str();
  };
  std::cout << label << ": n=" << r.n_samples << " micro_roc_auc=" << show(r.micro.roc_auc)
            << " micro_pr_auc=" << show(r.micro.pr_auc) << " f1=" << std::fixed
            << std::setprecision(4) << r.micro.f1 << '\n';
}

fs::path sibling_or(const std::string& given, const fs::path& checkpoint, const char* name) {
  if (!given.empty()) return given;
  return checkpoint.parent_path() / name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xadr: organ-level adverse drug reaction prediction on a knowledge graph"};
  app.require_subcommand(1);
  std::function<void()> action;

  // --- build-kg -------------------------------------------------------------
  struct {
    std::string edges, relations, out = "kg.tsv", variant = "basic", catalog_out;
  } kg;
  auto* build_kg = app.add_subcommand("build-kg", "validate an edge TSV and apply a KG variant");
  build_kg->add_option("--edges", kg.edges, "edge TSV")->required();
  build_kg->add_option("--relations", kg.relations, "relation catalog JSON");
  build_kg->add_option("--variant", kg.variant, "basic | abl1 | abl2 | abl3");
  build_kg->add_option("--out", kg.out, "output edge TSV");
  build_kg->add_option("--write-catalog", kg.catalog_out, "also write the relation catalog JSON");
  build_kg->callback([&] {
    action = [&] {
      const auto catalog = catalog_from(kg.relations);
      const auto g = apply_ablation(load_edges(kg.edges, catalog), parse_variant(kg.variant));
      auto out = open_out(kg.out);
      write_edges(g, out);
      if (!kg.catalog_out.empty()) open_out(kg.catalog_out) << catalog.to_json().dump(2) << '\n';
      std::cout << "entities\t" << g.num_entities() << "\nedges\t" << g.num_edges() << '\n';
      for (const auto& [rel, n] : g.relation_counts()) {
        std::cout << catalog.label(rel) << '\t' << n << '\n';
      }
    };
  });

  // --- build-dataset --------------------------------------------------------
  struct {
    std::string records, synergy, kg, relations, features, out_dir = "dataset", mode = "r",
                                                            ratios = "8:1:1";
    std::uint64_t seed = 0;
  } ds;
  auto* build_ds = app.add_subcommand("build-dataset", "build balanced drug-disjoint splits");
  build_ds->add_option("--records", ds.records, "ADR record TSV")->required();
  build_ds->add_option("--synergy", ds.synergy, "synergy pair TSV (mode d)");
  build_ds->add_option("--kg", ds.kg, "edge TSV defining the drug pool")->required();
  build_ds->add_option("--relations", ds.relations, "relation catalog JSON");
  build_ds->add_option("--features", ds.features, "restrict the pool to drugs with features");
  build_ds->add_option("--mode", ds.mode, "d | r");
  build_ds->add_option("--ratios", ds.ratios, "train:valid:test drug ratios");
  build_ds->add_option("--seed", ds.seed);
  build_ds->add_option("--out-dir", ds.out_dir);
  build_ds->callback([&] {
    action = [&] {
      const auto g = load_edges(ds.kg, catalog_from(ds.relations));
      std::vector<std::string> pool;
      if (ds.features.empty()) {
        for (const auto& e : g.entities()) {
          if (e.kind == EntityKind::Drug) pool.push_back(e.id);
        }
      } else {
        pool = drug_pool(g, load_features(ds.features));
      }
      const auto mode = parse_mode(ds.mode);
      const PairSet syn = ds.synergy.empty() ? PairSet{} : load_synergy(ds.synergy);
      const auto samples = build_samples(load_adr_records(ds.records), syn, mode, pool, ds.seed);
      const auto split = assemble_split(
          samples, split_drugs(pool, parse_ratios(ds.ratios), ds.seed), mode, ds.seed);
      const fs::path dir = ds.out_dir;
      write_to(dir / "train.tsv", [&](std::ostream& o) { write_triplets(split.train, o); });
      write_to(dir / "valid.tsv", [&](std::ostream& o) { write_triplets(split.valid, o); });
      write_to(dir / "test.tsv", [&](std::ostream& o) { write_triplets(split.test, o); });
      const auto stats = split_stats(split);
      open_out(dir / "split_stats.json") << stats.dump(2) << '\n';
      for (const auto& w : split.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << stats.dump(2) << '\n';
    };
  });

  // --- gen-synthetic-features ------------------------------------------------
  struct {
    int drugs = 200;
    std::uint64_t seed = 0;
    std::string out = "features.tsv";
  } gf;
  auto* gen_feat =
      app.add_subcommand("gen-synthetic-features", "write random drug features D0000..");
  gen_feat->add_option("--drugs", gf.drugs)->required();
  gen_feat->add_option("--seed", gf.seed);
  gen_feat->add_option("--out", gf.out);
  gen_feat->callback([&] {
    action = [&] {
      if (gf.drugs < 1) throw ValidationError("--drugs must be >= 1");
      write_to(gf.out, [&](std::ostream& o) { write_features(synthetic_features(gf.drugs, gf.seed), o); });
    };
  });

  // --- gen-synthetic ---------------------------------------------------------
  SyntheticConfig gs;
  std::string gs_out = "synthetic";
  auto* gen_syn = app.add_subcommand("gen-synthetic", "write a planted-signal dataset");
  gen_syn->add_option("--drugs", gs.n_drugs);
  gen_syn->add_option("--proteins", gs.n_proteins);
  gen_syn->add_option("--seed", gs.seed);
  gen_syn->add_option("--out-dir", gs_out);
  gen_syn->callback([&] {
    action = [&] {
      const auto data = gen_synthetic(gs);
      write_synthetic(data, gs_out);
      std::cout << "records\t" << data.records.size() << "\nsynergy\t" << data.synergy.size()
                << '\n';
    };
  });

  // --- train -----------------------------------------------------------------
  struct {
    std::string kg, relations, features, train_split, valid_split, config, assoc, out_dir = "model";
    std::optional<std::uint64_t> seed;
  } tr;
  HyperFlags tr_flags;
  auto* train_cmd = app.add_subcommand("train", "train a model on prepared splits");
  train_cmd->add_option("--kg", tr.kg, "edge TSV (variant already applied)")->required();
  train_cmd->add_option("--relations", tr.relations, "relation catalog JSON");
  train_cmd->add_option("--features", tr.features)->required();
  train_cmd->add_option("--train", tr.train_split, "training triplets")->required();
  train_cmd->add_option("--valid", tr.valid_split, "validation triplets")->required();
  train_cmd->add_option("--config", tr.config, "JSON with optional 'model' and 'train' objects");
  train_cmd->add_option("--assoc-matrix", tr.assoc, "15x15 TSV for ablated1");
  train_cmd->add_option("--seed", tr.seed);
  train_cmd->add_option("--out-dir", tr.out_dir);
  tr_flags.attach(train_cmd);
  train_cmd->callback([&] {
    action = [&] {
      ModelConfig mcfg;
      TrainConfig tcfg;
      if (!tr.config.empty()) {
        const auto j = read_json(tr.config);
        if (j.contains("model")) mcfg = ModelConfig::from_json(j.at("model"));
        if (j.contains("train")) tcfg = TrainConfig::from_json(j.at("train"));
      }
      tr_flags.apply(mcfg, tcfg);
      if (tr.seed) tcfg.seed = *tr.seed;
      const auto catalog = catalog_from(tr.relations);
      const auto features = load_features(tr.features);
      mcfg.segments = features.spec();
      mcfg.num_relations = catalog.size();
      DatasetSplit split;
      split.train = load_triplets(tr.train_split);
      split.valid = load_triplets(tr.valid_split);
      const auto graph = finalize_for_training(load_edges(tr.kg, catalog), split.train);
      std::optional<Eigen::MatrixXd> assoc;
      if (!tr.assoc.empty()) assoc = load_assoc_matrix(tr.assoc);
      const auto result =
          train_loop(split, graph, features, Model::create(mcfg, tcfg.seed, assoc), tcfg);
      const fs::path dir = tr.out_dir;
      save_checkpoint(result.best, (fs::create_directories(dir), dir / "checkpoint.json"));
      write_to(dir / "epoch_log.tsv", [&](std::ostream& o) { write_epoch_log(result.log, o); });
      write_to(dir / "train_kg.tsv", [&](std::ostream& o) { write_edges(graph, o); });
      open_out(dir / "config.json")
          << nlohmann::json{{"model", mcfg.to_json()}, {"train", tcfg.to_json()}}.dump(2) << '\n';
      std::cout << "best_epoch\t" << result.best_epoch << "\nbest_valid_roc_auc\t"
                << result.best_valid_roc_auc << '\n';
    };
  });

  // --- evaluate --------------------------------------------------------------
  struct {
    std::string checkpoint, split, kg, relations, features, out = "report.json", radar;
  } ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "score a triplet split with a checkpoint");
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--split", ev.split, "triplet TSV")->required();
  eval_cmd->add_option("--kg", ev.kg, "training graph (default: train_kg.tsv beside checkpoint)");
  eval_cmd->add_option("--relations", ev.relations);
  eval_cmd->add_option("--features", ev.features)->required();
  eval_cmd->add_option("--out", ev.out, "metrics JSON");
  eval_cmd->add_option("--radar", ev.radar, "per-organ radar TSV");
  eval_cmd->callback([&] {
    action = [&] {
      const auto model = load_checkpoint(ev.checkpoint);
      const auto graph =
          load_edges(sibling_or(ev.kg, ev.checkpoint, "train_kg.tsv"), catalog_from(ev.relations));
      const auto features = load_features(ev.features, model.config.segments);
      const auto triplets = load_triplets(ev.split);
      const auto pred = predict(model, graph, features, triplets);
      const auto report = evaluate_scores(pred.scores, pred.truth);
      open_out(ev.out) << report_to_json(report).dump(2) << '\n';
      if (!ev.radar.empty()) write_to(ev.radar, [&](std::ostream& o) { write_radar_tsv(report, o); });
      print_metrics_line("evaluate", report);
    };
  });

  // --- compare ---------------------------------------------------------------
  struct {
    std::string a, b, out;
  } cmp;
  auto* compare_cmd = app.add_subcommand("compare", "Welch t-test and Cohen's d between run sets");
  compare_cmd->add_option("--a", cmp.a, "one metric value per line")->required();
  compare_cmd->add_option("--b", cmp.b, "one metric value per line")->required();
  compare_cmd->add_option("--out", cmp.out, "result JSON");
  compare_cmd->callback([&] {
    action = [&] {
      const auto r = compare_runs(load_runs(cmp.a), load_runs(cmp.b));
      const nlohmann::json j = {{"mean_a", r.mean_1},           {"mean_b", r.mean_2},
                                {"t_statistic", r.t_statistic}, {"dof", r.dof},
                                {"p_value", r.p_value},         {"cohens_d", r.cohens_d},
                                {"tier", r.tier}};
      if (!cmp.out.empty()) open_out(cmp.out) << j.dump(2) << '\n';
      std::cout << j.dump(2) << '\n';
    };
  });

  // --- explain ---------------------------------------------------------------
  struct {
    std::string pair, checkpoint, kg, relations, features, kind, out_dir = ".";
    int top_k = 8;
  } ex;
  auto* explain_cmd = app.add_subcommand("explain", "rank entities driving a pair's prediction");
  explain_cmd->add_option("--pair", ex.pair, "D0001,D0002")->required();
  explain_cmd->add_option("--checkpoint", ex.checkpoint)->required();
  explain_cmd->add_option("--kg", ex.kg, "training graph (default: train_kg.tsv beside checkpoint)");
  explain_cmd->add_option("--relations", ex.relations);
  explain_cmd->add_option("--features", ex.features)->required();
  explain_cmd->add_option("--top-k", ex.top_k);
  explain_cmd->add_option("--kind", ex.kind, "restrict to one entity kind, e.g. protein");
  explain_cmd->add_option("--out-dir", ex.out_dir);
  explain_cmd->callback([&] {
    action = [&] {
      const auto [p, q] = parse_pair(ex.pair);
      const auto model = load_checkpoint(ex.checkpoint);
      const auto graph =
          load_edges(sibling_or(ex.kg, ex.checkpoint, "train_kg.tsv"), catalog_from(ex.relations));
      const auto features = load_features(ex.features, model.config.segments);
      std::optional<EntityKind> kind;
      if (!ex.kind.empty()) kind = parse_kind(ex.kind);
      const auto ranking = rank_entities(model, graph, features, p, q, ex.top_k, kind);
      const fs::path dir = ex.out_dir;
      const std::string stem = "explain_" + p + "_" + q;
      write_to(dir / (stem + ".tsv"), [&](std::ostream& o) { write_ranking(ranking, o); });
      write_to(dir / (stem + "_edges.tsv"), [&](std::ostream& o) { write_induced_edges(graph, induced_edges(graph, ranking), o); });
      write_ranking(ranking, std::cout);
    };
  });

  // --- gradcheck -------------------------------------------------------------
  struct {
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string variant = "full", out;
    double step = 1e-5, tolerance = 1e-4;
  } gc;
  auto* grad_cmd =
      app.add_subcommand("gradcheck", "finite-difference check on the built-in six-entity graph");
  grad_cmd->add_option("--seed", gc.seeds, "one or more seeds");
  grad_cmd->add_option("--variant", gc.variant);
  grad_cmd->add_option("--step", gc.step);
  grad_cmd->add_option("--tolerance", gc.tolerance);
  grad_cmd->add_option("--out", gc.out, "report TSV");
  grad_cmd->callback([&] {
    action = [&] {
      std::ofstream file;
      if (!gc.out.empty()) file = open_out(gc.out);
      double worst = 0.0;
      for (auto seed : gc.seeds) {
        auto t = tiny_problem(seed, parse_model_variant(gc.variant));
        ForwardOptions opts;
        opts.adr_mask = ForwardOptions::AdrMask::Pair;
        const auto report =
            gradient_check(t.model, t.graph, t.features, t.batch, seed, gc.step, 0, opts);
        write_gradcheck_report(report, std::cout);
        if (file) write_gradcheck_report(report, file);
        worst = std::max(worst, report.worst());
      }
      std::cout << "worst_rel_error\t" << worst << '\n';
      if (!(worst < gc.tolerance)) {
        throw StageError("gradient check failed: worst relative error " + std::to_string(worst));
      }
    };
  });

  // --- run -------------------------------------------------------------------
  struct {
    std::string config, edges, features, records, synergy, relations, assoc, out_dir, kg_variant,
        mode, ratios;
    std::optional<std::uint64_t> seed;
    std::optional<int> drugs, proteins, top_k;
    bool synthetic = false;
    bool swap = false;
    std::vector<std::string> explain;
  } rn;
  HyperFlags rn_flags;
  auto* run_cmd = app.add_subcommand("run", "full pipeline: build-kg, build-dataset, train, evaluate");
  run_cmd->add_option("--config", rn.config, "RunConfig JSON; flags override it");
  run_cmd->add_flag("--synthetic", rn.synthetic, "generate a planted-signal dataset first");
  run_cmd->add_option("--drugs", rn.drugs, "synthetic drug count");
  run_cmd->add_option("--proteins", rn.proteins, "synthetic protein count");
  run_cmd->add_option("--edges", rn.edges);
  run_cmd->add_option("--features", rn.features);
  run_cmd->add_option("--records", rn.records);
  run_cmd->add_option("--synergy", rn.synergy);
  run_cmd->add_option("--relations", rn.relations);
  run_cmd->add_option("--assoc-matrix", rn.assoc);
  run_cmd->add_option("--kg-variant", rn.kg_variant, "basic | abl1 | abl2 | abl3");
  run_cmd->add_option("--mode", rn.mode, "d | r");
  run_cmd->add_option("--ratios", rn.ratios);
  run_cmd->add_option("--seed", rn.seed);
  run_cmd->add_option("--out-dir", rn.out_dir);
  run_cmd->add_option("--explain", rn.explain, "drug pair A,B to explain (repeatable)");
  run_cmd->add_option("--top-k", rn.top_k);
  run_cmd->add_flag("--swap-valid-test", rn.swap, "select on test drugs, report on valid drugs");
  rn_flags.attach(run_cmd);
  run_cmd->callback([&] {
    action = [&] {
      RunConfig cfg = rn.config.empty() ? RunConfig{} : load_run_config(rn.config);
      if (rn.synthetic) cfg.synthetic = true;
      if (rn.drugs) cfg.synthetic_drugs = *rn.drugs;
      if (rn.proteins) cfg.synthetic_proteins = *rn.proteins;
      if (!rn.edges.empty()) cfg.paths.edges = rn.edges;
      if (!rn.features.empty()) cfg.paths.features = rn.features;
      if (!rn.records.empty()) cfg.paths.adr_records = rn.records;
      if (!rn.synergy.empty()) cfg.paths.synergy = rn.synergy;
      if (!rn.relations.empty()) cfg.paths.relations = rn.relations;
      if (!rn.assoc.empty()) cfg.paths.assoc_matrix = rn.assoc;
      if (!rn.out_dir.empty()) cfg.paths.out_dir = rn.out_dir;
      if (!rn.kg_variant.empty()) cfg.kg_variant = parse_variant(rn.kg_variant);
      if (!rn.mode.empty()) cfg.mode = parse_mode(rn.mode);
      if (!rn.ratios.empty()) cfg.ratios = parse_ratios(rn.ratios);
      if (rn.seed) cfg.seed = *rn.seed;
      if (rn.top_k) cfg.explain_top_k = *rn.top_k;
      if (rn.swap) cfg.swap_valid_test = true;
      for (const auto& pq : rn.explain) cfg.explain_pairs.push_back(parse_pair(pq));
      rn_flags.apply(cfg.model, cfg.train);
      const auto summary = run_pipeline(cfg);
      std::cout << "best_epoch\t" << summary.training.best_epoch << '\n';
      print_metrics_line("test", summary.test_metrics);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  try {
    action();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
