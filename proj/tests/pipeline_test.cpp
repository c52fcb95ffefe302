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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "xadr/pipeline.hpp"

namespace xadr {
namespace {

namespace fs = std::filesystem;
using testing::read_bytes;
using testing::scratch_dir;

RunConfig quick(const std::string& name) {
  RunConfig c;
  c.synthetic = true;
  c.synthetic_drugs = 40;
  c.synthetic_proteins = 30;
  c.seed = 4;
  c.model.layers = 1;
  c.model.hidden = 4;
  c.model.organ_dim = 4;
  c.model.heads = 2;
  c.model.segments = {8, 32, 8, 8};
  c.train.max_epochs = 2;
  c.train.patience = 2;
  c.paths.out_dir = scratch_dir(name);
  return c;
}

int cli(const std::string& args) {
  const int status = std::system((std::string(XADR_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Sha256, KnownDigest) {
  const auto p = scratch_dir("sha") / "abc.txt";
  std::ofstream(p) << "abc";
  EXPECT_EQ(sha256_file(p), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_THROW(sha256_file(p.parent_path() / "missing"), std::exception);
}

TEST(RunConfig, JsonRoundTrip) {
  auto c = quick("cfg_json");
  c.kg_variant = KGVariant::Ablation2;
  c.mode = DatasetMode::D;
  c.ratios = {7, 2, 1};
  c.swap_valid_test = true;
  c.explain_pairs = {{"D0001", "D0002"}};
  c.model.variant = ModelVariant::Ablated2LastLayerOnly;
  c.train.learning_rate = 0.005;
  const auto back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  const auto path = c.paths.out_dir / "run.json";
  std::ofstream(path) << c.to_json().dump();
  EXPECT_EQ(load_run_config(path).to_json(), c.to_json());
}

TEST(RunConfig, MissingInputNamesPath) {
  RunConfig c;
  c.paths.edges = scratch_dir("missing") / "edges.tsv";
  c.paths.features = c.paths.edges.parent_path() / "nope.tsv";
  c.paths.adr_records = c.paths.features;
  try {
    c.validate();
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(".tsv"), std::string::npos) << e.what();
  }
  c = quick("bad_synth");
  c.synthetic_drugs = 5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = quick("bad_assoc");
  c.model.variant = ModelVariant::Ablated1FixedMatrix;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Pipeline, WritesEveryArtifact) {
  const auto cfg = quick("artifacts");
  const auto s = run_pipeline(cfg);
  const fs::path out = cfg.paths.out_dir;
  for (const auto& f : s.manifest["outputs"]) {
    EXPECT_TRUE(fs::exists(out / f.get<std::string>())) << f;
  }
  for (const char* f : {"manifest.json", "train_kg.tsv", "metrics.json", "epoch_log.tsv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_EQ(s.manifest["inputs"]["edges"]["path"], "inputs/edges.tsv");
  EXPECT_EQ(s.manifest["inputs"]["edges"]["sha256"], sha256_file(out / "inputs/edges.tsv"));
  EXPECT_EQ(s.manifest["epochs_run"], s.training.log.size());
  EXPECT_GT(s.test_metrics.n_samples, 0u);
  const auto model = load_checkpoint(out / "checkpoint.json");
  EXPECT_EQ(model.config.hidden, 4);
}

TEST(Pipeline, Ablated2RecordedEverywhere) {
  auto cfg = quick("ablated2");
  cfg.model.variant = ModelVariant::Ablated2LastLayerOnly;
  const auto s = run_pipeline(cfg);
  EXPECT_EQ(s.manifest["model_variant"], std::string(model_variant_name(cfg.model.variant)));
  EXPECT_EQ(load_checkpoint(cfg.paths.out_dir / "checkpoint.json").config.variant,
            ModelVariant::Ablated2LastLayerOnly);
}

TEST(Pipeline, DeterministicAndHashesTrackInputs) {
  const auto a = quick("det_a");
  auto b = quick("det_b");
  const auto sa = run_pipeline(a);
  const auto sb = run_pipeline(b);
  for (const char* f : {"metrics.json", "epoch_log.tsv", "train.tsv", "checkpoint.json"}) {
    EXPECT_EQ(read_bytes(a.paths.out_dir / f), read_bytes(b.paths.out_dir / f)) << f;
  }
  EXPECT_EQ(sa.manifest["inputs"], sb.manifest["inputs"]);

  // Same files fed back as explicit inputs, then one record dropped.
  RunConfig c = quick("det_c");
  c.synthetic = false;
  const auto in = a.paths.out_dir / "inputs";
  c.paths.edges = in / "edges.tsv";
  c.paths.features = in / "features.tsv";
  c.paths.adr_records = in / "adr_records.tsv";
  c.paths.synergy = in / "synergy.tsv";
  const auto sc = run_pipeline(c);
  EXPECT_EQ(sc.manifest["inputs"]["adr_records"]["sha256"],
            sa.manifest["inputs"]["adr_records"]["sha256"]);

  const auto edited = c.paths.out_dir / "records_edited.tsv";
  auto text = read_bytes(c.paths.adr_records);
  text.erase(text.rfind('\n', text.size() - 2) + 1);
  std::ofstream(edited, std::ios::binary) << text;
  RunConfig d = c;
  d.paths.out_dir = scratch_dir("det_d");
  d.paths.adr_records = edited;
  const auto sd = run_pipeline(d);
  EXPECT_NE(sd.manifest["inputs"]["adr_records"]["sha256"],
            sc.manifest["inputs"]["adr_records"]["sha256"]);
  EXPECT_EQ(sd.manifest["inputs"]["edges"]["sha256"], sc.manifest["inputs"]["edges"]["sha256"]);
}

TEST(Pipeline, SwapValidTestExchangesSplits) {
  const auto a = quick("swap_a");
  auto b = quick("swap_b");
  b.swap_valid_test = true;
  run_pipeline(a);
  const auto sb = run_pipeline(b);
  EXPECT_EQ(read_bytes(a.paths.out_dir / "valid.tsv"), read_bytes(b.paths.out_dir / "test.tsv"));
  EXPECT_EQ(read_bytes(a.paths.out_dir / "test.tsv"), read_bytes(b.paths.out_dir / "valid.tsv"));
  EXPECT_EQ(sb.manifest["swap_valid_test"], true);
}

TEST(Pipeline, StageFailureNamesStage) {
  auto cfg = quick("stage_fail");
  cfg.explain_pairs = {{"D0000", "NOPE"}};
  try {
    run_pipeline(cfg);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_NE(std::string(e.what()).find("explain"), std::string::npos) << e.what();
  }
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli");
  EXPECT_EQ(cli("gradcheck --seed 1"), 0);
  EXPECT_EQ(cli("no-such-command"), 2);
  EXPECT_EQ(cli("run --features " + (dir / "absent.tsv").string() + " --edges x --records y"), 2);
  EXPECT_EQ(cli("gradcheck --seed 1 --tolerance 0"), 3);
  EXPECT_EQ(cli("gen-synthetic --drugs 40 --proteins 30 --seed 2 --out-dir " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "edges.tsv"));
  EXPECT_EQ(cli("build-kg --edges " + (dir / "edges.tsv").string() + " --variant abl2 --out " +
                (dir / "kg2.tsv").string()),
            0);
  EXPECT_EQ(cli("build-kg --edges " + (dir / "edges.tsv").string() + " --variant abl9"), 2);
}

}  // namespace
}  // namespace xadr
