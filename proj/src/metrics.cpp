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

#include "xadr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

namespace xadr {

namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("scores and labels differ in length");
  }
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  const auto n_neg = static_cast<std::int64_t>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  const auto idx = order_by_score(scores, false);
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) pos_rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

std::optional<double> pr_auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  if (n_pos == 0) return std::nullopt;

  const auto idx = order_by_score(scores, true);
  double ap = 0.0, prev_recall = 0.0;
  std::int64_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      tp += labels[idx[j]] == 1;
      ++seen;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double ConfusionCounts::accuracy() const {
  return safe_div(static_cast<double>(tp + tn), static_cast<double>(total()));
}
double ConfusionCounts::precision() const {
  return safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
}
double ConfusionCounts::recall() const {
  return safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
}
double ConfusionCounts::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}
double ConfusionCounts::hamming_loss() const {
  return safe_div(static_cast<double>(fp + fn), static_cast<double>(total()));
}

ThresholdedCounts thresholded_metrics(const Eigen::MatrixXd& predicted,
                                      const Eigen::MatrixXd& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols() ||
      truth.cols() != kNumOrgans) {
    throw ValidationError("thresholded_metrics: expected matching N x 15 matrices");
  }
  ThresholdedCounts c;
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    for (int j = 0; j < kNumOrgans; ++j) {
      const bool y = truth(i, j) != 0.0;
      const bool yhat = predicted(i, j) != 0.0;
      auto& o = c.per_organ[j];
      if (y && yhat) {
        ++o.tp;
      } else if (!y && yhat) {
        ++o.fp;
      } else if (!y && !yhat) {
        ++o.tn;
      } else {
        ++o.fn;
      }
    }
  }
  for (const auto& o : c.per_organ) {
    c.micro.tp += o.tp;
    c.micro.fp += o.fp;
    c.micro.tn += o.tn;
    c.micro.fn += o.fn;
  }
  return c;
}

namespace {

void fill_counts(MetricSet& m, const ConfusionCounts& c) {
  m.accuracy = c.accuracy();
  m.precision = c.precision();
  m.recall = c.recall();
  m.f1 = c.f1();
  m.hamming_loss = c.hamming_loss();
}

}  // namespace

MetricsReport evaluate_scores(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& truth) {
  if (scores.rows() != truth.rows() || scores.cols() != kNumOrgans ||
      truth.cols() != kNumOrgans) {
    throw ValidationError("evaluate_scores: expected matching N x 15 matrices");
  }
  MetricsReport r;
  r.n_samples = static_cast<std::size_t>(scores.rows());
  const Eigen::MatrixXd predicted = (scores.array() >= 0.5).cast<double>();
  const auto counts = thresholded_metrics(predicted, truth);

  std::vector<double> flat_scores;
  std::vector<int> flat_labels;
  flat_scores.reserve(scores.size());
  flat_labels.reserve(scores.size());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (int j = 0; j < kNumOrgans; ++j) {
      flat_scores.push_back(scores(i, j));
      flat_labels.push_back(truth(i, j) != 0.0 ? 1 : 0);
    }
  }
  r.micro.roc_auc = roc_auc(flat_scores, flat_labels);
  r.micro.pr_auc = pr_auc(flat_scores, flat_labels);
  fill_counts(r.micro, counts.micro);

  double roc_sum = 0, pr_sum = 0;
  int roc_n = 0, pr_n = 0;
  std::vector<double> col_scores(scores.rows());
  std::vector<int> col_labels(scores.rows());
  for (int j = 0; j < kNumOrgans; ++j) {
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      col_scores[i] = scores(i, j);
      col_labels[i] = truth(i, j) != 0.0 ? 1 : 0;
    }
    auto& m = r.per_organ[j];
    m.roc_auc = roc_auc(col_scores, col_labels);
    m.pr_auc = pr_auc(col_scores, col_labels);
    fill_counts(m, counts.per_organ[j]);
    if (m.roc_auc) roc_sum += *m.roc_auc, ++roc_n;
    if (m.pr_auc) pr_sum += *m.pr_auc, ++pr_n;
    r.macro.accuracy += m.accuracy / kNumOrgans;
    r.macro.precision += m.precision / kNumOrgans;
    r.macro.recall += m.recall / kNumOrgans;
    r.macro.f1 += m.f1 / kNumOrgans;
    r.macro.hamming_loss += m.hamming_loss / kNumOrgans;
  }
  if (roc_n > 0) r.macro.roc_auc = roc_sum / roc_n;
  if (pr_n > 0) r.macro.pr_auc = pr_sum / pr_n;
  return r;
}

namespace {

nlohmann::json metric_set_json(const MetricSet& m) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"pr_auc", opt(m.pr_auc)},       {"roc_auc", opt(m.roc_auc)},
          {"accuracy", m.accuracy},        {"precision", m.precision},
          {"recall", m.recall},            {"f1", m.f1},
          {"hamming_loss", m.hamming_loss}};
}

}  // namespace

nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json organs = nlohmann::json::array();
  for (int j = 0; j < kNumOrgans; ++j) {
    auto m = metric_set_json(r.per_organ[j]);
    m["organ"] = j + 1;
    organs.push_back(m);
  }
  return {{"n_samples", r.n_samples},
          {"micro", metric_set_json(r.micro)},
          {"macro", metric_set_json(r.macro)},
          {"per_organ", organs}};
}

void write_radar_tsv(const MetricsReport& r, std::ostream& out) {
  out << "organ\tmetric\tvalue\n";
  for (int j = 0; j < kNumOrgans; ++j) {
    const auto& m = r.per_organ[j];
    const auto row = [&](const char* name, double v) {
      out << (j + 1) << '\t' << name << '\t' << v << '\n';
    };
    if (m.pr_auc) row("pr_auc", *m.pr_auc);
    if (m.roc_auc) row("roc_auc", *m.roc_auc);
    // Thresholded values need both classes to be meaningful on a radar axis.
    if (m.roc_auc) {
      row("accuracy", m.accuracy);
      row("precision", m.precision);
      row("recall", m.recall);
      row("f1", m.f1);
      row("hamming_loss", m.hamming_loss);
    }
  }
}

std::vector<double> load_runs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open run file " + path.string());
  std::vector<double> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw ValidationError(path.string() + ": line " + std::to_string(line_no) +
                            ": not a number");
    }
  }
  return out;
}

}  // namespace xadr
