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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xadr/dataset.hpp"
#include "xadr/features.hpp"
#include "xadr/kg.hpp"
#include "xadr/model.hpp"

namespace xadr {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 64;
  int max_epochs = 100;
  int patience = 10;  // epochs without validation ROC-AUC improvement
  std::uint64_t seed = 0;
  std::vector<std::string> frozen;  // tensor names excluded from training

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

inline constexpr double kProbClamp = 1e-12;

// Mean binary cross-entropy over the 15 organs, probabilities clamped to
// [1e-12, 1 - 1e-12].
double bce_loss(const Eigen::VectorXd& s, const LabelVector& labels);
// dLoss/dlogits for S = sigmoid(logits); zero where the clamp is active.
Eigen::VectorXd bce_logit_gradient(const Eigen::VectorXd& s, const LabelVector& labels);

// Forward options for training and scoring: destination pruning on.
inline ForwardOptions scoring_options() {
  ForwardOptions o;
  o.prune_to_destination = true;
  return o;
}

// Resolves triplet drugs against the graph and feature table.
class PairResolver {
 public:
  PairResolver(const KnowledgeGraph& g, const FeatureTable& features);
  struct Resolved {
    int p, q;
    const Eigen::VectorXd* x_p;
    const Eigen::VectorXd* x_q;
  };
  Resolved operator()(const Triplet& t) const;

 private:
  const KnowledgeGraph& graph_;
  const FeatureTable& features_;
};

// Mean loss over `batch`; `grad` receives the mean gradient (overwritten).
double loss_and_gradient(const Model& model, const KnowledgeGraph& g,
                         const FeatureTable& features, std::span<const Triplet> batch,
                         ModelParams& grad, const ForwardOptions& opts = {});
double batch_loss(const Model& model, const KnowledgeGraph& g, const FeatureTable& features,
                  std::span<const Triplet> batch, const ForwardOptions& opts = {});

struct AdamState {
  ModelParams m;
  ModelParams v;
  long step = 0;

  static AdamState zeros(const ModelConfig& cfg);
};

// Bias-corrected Adam update of every tensor not listed in cfg.frozen.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const TrainConfig& cfg);

// N x 15 scores and truth for a triplet list.
struct Predictions {
  Eigen::MatrixXd scores;
  Eigen::MatrixXd truth;
};
Predictions predict(const Model& model, const KnowledgeGraph& g, const FeatureTable& features,
                    std::span<const Triplet> triplets,
                    const ForwardOptions& opts = scoring_options());

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_roc_auc = 0.0;  // NaN when undefined
};

struct TrainResult {
  Model best;
  int best_epoch = 0;
  double best_valid_roc_auc = 0.0;
  std::vector<EpochLog> log;
};

// `g` must already be finalized with the training triplets only.
TrainResult train_loop(const DatasetSplit& split, const KnowledgeGraph& g,
                       const FeatureTable& features, Model model, const TrainConfig& cfg);

void write_epoch_log(const std::vector<EpochLog>& log, std::ostream& out);

// --- gradient verification ---------------------------------------------------

struct TensorCheck {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double max_abs_analytic = 0.0;
};

struct GradCheckReport {
  std::uint64_t seed = 0;
  double step = 1e-5;
  std::vector<TensorCheck> tensors;

  double worst() const;
};

// Compares analytic gradients of the mean batch loss with central
// differences. At most `max_entries` seeded entries are probed per tensor
// (0 = every entry). Relative error is |a - n| / max(1, |a|, |n|).
GradCheckReport gradient_check(Model& model, const KnowledgeGraph& g,
                               const FeatureTable& features, std::span<const Triplet> batch,
                               std::uint64_t seed, double step = 1e-5,
                               std::size_t max_entries = 0, const ForwardOptions& opts = {});

void write_gradcheck_report(const GradCheckReport& r, std::ostream& out);

}  // namespace xadr
