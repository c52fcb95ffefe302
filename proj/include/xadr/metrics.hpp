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

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "xadr/common.hpp"

namespace xadr {

// Area under the ROC curve as P(score_pos > score_neg) + 0.5 P(tie), via
// midranks. Undefined without both classes.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels);

// Average precision: sum over descending score groups of
// (recall gain) x (precision at the group). Undefined without positives.
std::optional<double> pr_auc(std::span<const double> scores, std::span<const int> labels);

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  double accuracy() const;
  double precision() const;  // 0 when nothing is predicted positive
  double recall() const;     // 0 when there are no positives
  double f1() const;         // 0 when precision + recall = 0
  double hamming_loss() const;
};

struct MetricSet {
  std::optional<double> pr_auc;
  std::optional<double> roc_auc;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0, hamming_loss = 0;
};

struct ThresholdedCounts {
  ConfusionCounts micro;
  std::array<ConfusionCounts, kNumOrgans> per_organ;
};

// Predicted and true labels are N x 15 0/1 matrices.
ThresholdedCounts thresholded_metrics(const Eigen::MatrixXd& predicted,
                                      const Eigen::MatrixXd& truth);

struct MetricsReport {
  MetricSet micro;  // flattened N x 15
  MetricSet macro;  // mean over organs, ranking metrics over defined organs only
  std::array<MetricSet, kNumOrgans> per_organ;
  std::size_t n_samples = 0;
};

// Scores are N x 15 probabilities; labels are thresholded at 0.5.
MetricsReport evaluate_scores(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& truth);

nlohmann::json report_to_json(const MetricsReport& r);
// Rows `organ metric value`; undefined per-organ values are omitted.
void write_radar_tsv(const MetricsReport& r, std::ostream& out);

struct SignificanceResult {
  double mean_1 = 0, mean_2 = 0;
  double t_statistic = 0;
  double dof = 0;
  double p_value = 1;
  double cohens_d = 0;
  std::string tier;  // "ns", "*", "**", "***"
};

std::string significance_tier(double p);

// Two-sided Welch t-test and Cohen's d with the pooled standard deviation.
SignificanceResult compare_runs(std::span<const double> runs_1, std::span<const double> runs_2);

// One value per line (blank lines and '#' comments ignored).
std::vector<double> load_runs(const std::filesystem::path& path);

}  // namespace xadr
