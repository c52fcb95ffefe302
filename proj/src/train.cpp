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

#include "xadr/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <ostream>

#include "xadr/metrics.hpp"

namespace xadr {

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || !(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1) ||
      !(epsilon > 0)) {
    throw ValidationError("train: learning rate, betas and epsilon must be positive (betas < 1)");
  }
  if (batch_size < 1 || max_epochs < 1) {
    throw ValidationError("train: batch_size and max_epochs must be >= 1");
  }
  if (patience < 0 || patience > max_epochs) {
    throw ValidationError("train: patience must lie in [0, max_epochs]");
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"beta1", beta1},
          {"beta2", beta2},                 {"epsilon", epsilon},
          {"batch_size", batch_size},       {"max_epochs", max_epochs},
          {"patience", patience},           {"seed", seed},
          {"frozen", frozen}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  c.frozen = j.value("frozen", c.frozen);
  c.validate();
  return c;
}

double bce_loss(const Eigen::VectorXd& s, const LabelVector& labels) {
  double sum = 0.0;
  for (int i = 0; i < kNumOrgans; ++i) {
    const double p = std::clamp(s[i], kProbClamp, 1.0 - kProbClamp);
    sum += labels.bits[i] ? std::log(p) : std::log(1.0 - p);
  }
  return -sum / kNumOrgans;
}

Eigen::VectorXd bce_logit_gradient(const Eigen::VectorXd& s, const LabelVector& labels) {
  Eigen::VectorXd g(kNumOrgans);
  for (int i = 0; i < kNumOrgans; ++i) {
    const bool clamped = s[i] < kProbClamp || s[i] > 1.0 - kProbClamp;
    g[i] = clamped ? 0.0 : (s[i] - labels.bits[i]) / kNumOrgans;
  }
  return g;
}

PairResolver::PairResolver(const KnowledgeGraph& g, const FeatureTable& features)
    : graph_(g), features_(features) {}

PairResolver::Resolved PairResolver::operator()(const Triplet& t) const {
  return {graph_.index_of(t.p), graph_.index_of(t.q), &features_.at(t.p).values,
          &features_.at(t.q).values};
}

double loss_and_gradient(const Model& model, const KnowledgeGraph& g,
                         const FeatureTable& features, std::span<const Triplet> batch,
                         ModelParams& grad, const ForwardOptions& opts) {
  grad.set_zero();
  if (batch.empty()) return 0.0;
  PairResolver resolve(g, features);
  OuterProductBuffer outer;
  double loss = 0.0;
  for (const auto& t : batch) {
    const auto r = resolve(t);
    const auto fwd = forward_pair(model, g, r.p, r.q, *r.x_p, *r.x_q, opts);
    loss += bce_loss(fwd.scores(), t.labels);
    backward_pair(model, g, *r.x_p, *r.x_q, fwd, bce_logit_gradient(fwd.scores(), t.labels),
                  grad, opts, &outer);
  }
  outer.flush();
  const double inv = 1.0 / static_cast<double>(batch.size());
  grad.for_each([&](const std::string&, Eigen::MatrixXd& m) { m *= inv; });
  return loss * inv;
}

double batch_loss(const Model& model, const KnowledgeGraph& g, const FeatureTable& features,
                  std::span<const Triplet> batch, const ForwardOptions& opts) {
  if (batch.empty()) return 0.0;
  PairResolver resolve(g, features);
  double loss = 0.0;
  for (const auto& t : batch) {
    const auto r = resolve(t);
    loss += bce_loss(forward_pair(model, g, r.p, r.q, *r.x_p, *r.x_q, opts).scores(), t.labels);
  }
  return loss / static_cast<double>(batch.size());
}

AdamState AdamState::zeros(const ModelConfig& cfg) {
  return {ModelParams::zeros(cfg), ModelParams::zeros(cfg), 0};
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const TrainConfig& cfg) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);

  // Tensors are visited in the same order in all four structures.
  std::vector<const Eigen::MatrixXd*> g;
  std::vector<Eigen::MatrixXd*> m, v;
  grads.for_each([&](const std::string&, const Eigen::MatrixXd& x) { g.push_back(&x); });
  state.m.for_each([&](const std::string&, Eigen::MatrixXd& x) { m.push_back(&x); });
  state.v.for_each([&](const std::string&, Eigen::MatrixXd& x) { v.push_back(&x); });
  std::size_t i = 0;
  params.for_each([&](const std::string& name, Eigen::MatrixXd& p) {
    const std::size_t k = i++;
    if (std::find(cfg.frozen.begin(), cfg.frozen.end(), name) != cfg.frozen.end()) return;
    auto& mk = *m[k];
    auto& vk = *v[k];
    const auto& gk = *g[k];
    mk = cfg.beta1 * mk + (1.0 - cfg.beta1) * gk;
    vk = cfg.beta2 * vk + (1.0 - cfg.beta2) * gk.cwiseProduct(gk);
    p.array() -= cfg.learning_rate * (mk.array() / c1) / ((vk.array() / c2).sqrt() + cfg.epsilon);
  });
}

Predictions predict(const Model& model, const KnowledgeGraph& g, const FeatureTable& features,
                    std::span<const Triplet> triplets, const ForwardOptions& opts) {
  Predictions out;
  out.scores.resize(static_cast<Eigen::Index>(triplets.size()), kNumOrgans);
  out.truth.resize(static_cast<Eigen::Index>(triplets.size()), kNumOrgans);
  PairResolver resolve(g, features);
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    const auto r = resolve(t);
    out.scores.row(i) = forward_pair(model, g, r.p, r.q, *r.x_p, *r.x_q, opts).scores().transpose();
    for (int j = 0; j < kNumOrgans; ++j) out.truth(i, j) = t.labels.bits[j];
  }
  return out;
}

namespace {

double micro_roc(const Predictions& p) {
  if (p.scores.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
  const auto r = evaluate_scores(p.scores, p.truth);
  return r.micro.roc_auc.value_or(std::numeric_limits<double>::quiet_NaN());
}

}  // namespace

TrainResult train_loop(const DatasetSplit& split, const KnowledgeGraph& g,
                       const FeatureTable& features, Model model, const TrainConfig& cfg) {
  cfg.validate();
  if (split.train.empty()) throw ValidationError("training set is empty");
  for (const auto& name : cfg.frozen) {
    if (!model.params.find(name)) throw ValidationError("unknown frozen tensor '" + name + "'");
  }

  TrainResult result;
  AdamState adam = AdamState::zeros(model.config);
  ModelParams grad = ModelParams::zeros(model.config);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Triplet> batch;
  const ForwardOptions opts = scoring_options();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(split.train[order[i]]);
      loss_sum += loss_and_gradient(model, g, features, batch, grad, opts) *
                  static_cast<double>(batch.size());
      adam_step(model.params, grad, adam, cfg);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    entry.valid_roc_auc = micro_roc(predict(model, g, features, split.valid));
    result.log.push_back(entry);

    if (epoch == 1 || entry.valid_roc_auc > result.best_valid_roc_auc) {
      result.best = model;
      result.best_epoch = epoch;
      result.best_valid_roc_auc = entry.valid_roc_auc;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= cfg.patience) break;
  }
  return result;
}

void write_epoch_log(const std::vector<EpochLog>& log, std::ostream& out) {
  out << "epoch\ttrain_loss\tvalid_roc_auc\n";
  out << std::setprecision(12);
  for (const auto& e : log) {
    out << e.epoch << '\t' << e.train_loss << '\t';
    if (std::isnan(e.valid_roc_auc)) {
      out << "nan";
    } else {
      out << e.valid_roc_auc;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& t : tensors) w = std::max(w, t.max_rel_error);
  return w;
}

GradCheckReport gradient_check(Model& model, const KnowledgeGraph& g,
                               const FeatureTable& features, std::span<const Triplet> batch,
                               std::uint64_t seed, double step, std::size_t max_entries,
                               const ForwardOptions& opts) {
  GradCheckReport report;
  report.seed = seed;
  report.step = step;
  ModelParams analytic = ModelParams::zeros(model.config);
  loss_and_gradient(model, g, features, batch, analytic, opts);

  std::vector<const Eigen::MatrixXd*> grads;
  analytic.for_each([&](const std::string&, const Eigen::MatrixXd& m) { grads.push_back(&m); });
  Rng rng(seed);
  std::size_t k = 0;
  model.params.for_each([&](const std::string& name, Eigen::MatrixXd& p) {
    const Eigen::MatrixXd& ga = *grads[k++];
    TensorCheck check;
    check.name = name;
    std::vector<Eigen::Index> entries(p.size());
    std::iota(entries.begin(), entries.end(), 0);
    if (max_entries > 0 && entries.size() > max_entries) {
      rng.shuffle(entries);
      entries.resize(max_entries);
    }
    for (auto idx : entries) {
      double& x = p.data()[idx];
      const double saved = x;
      x = saved + step;
      const double up = batch_loss(model, g, features, batch, opts);
      x = saved - step;
      const double down = batch_loss(model, g, features, batch, opts);
      x = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = ga.data()[idx];
      const double err =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      check.max_rel_error = std::max(check.max_rel_error, err);
      check.max_abs_analytic = std::max(check.max_abs_analytic, std::abs(a));
      ++check.checked;
    }
    report.tensors.push_back(check);
  });
  return report;
}

void write_gradcheck_report(const GradCheckReport& r, std::ostream& out) {
  out << "# seed=" << r.seed << " step=" << r.step << '\n';
  out << "tensor\tchecked\tmax_rel_error\tmax_abs_analytic\n";
  out << std::setprecision(6);
  for (const auto& t : r.tensors) {
    out << t.name << '\t' << t.checked << '\t' << t.max_rel_error << '\t' << t.max_abs_analytic
        << '\n';
  }
}

}  // namespace xadr
