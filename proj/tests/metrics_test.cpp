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

#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "xadr/common.hpp"
#include "xadr/metrics.hpp"

namespace xadr {
namespace {

std::optional<double> roc(const std::vector<double>& s, const std::vector<int>& y) {
  return roc_auc(s, y);
}
std::optional<double> pr(const std::vector<double>& s, const std::vector<int>& y) {
  return pr_auc(s, y);
}

TEST(RocAuc, Examples) {
  EXPECT_DOUBLE_EQ(*roc({0.9, 0.8, 0.3, 0.2}, {1, 0, 1, 0}), 0.75);
  EXPECT_DOUBLE_EQ(*roc({0.9, 0.8, 0.3, 0.2}, {1, 1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(*roc({0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0}), 0.5);
}

TEST(RocAuc, UndefinedForOneClass) {
  EXPECT_FALSE(roc({0.1, 0.2}, {1, 1}).has_value());
  EXPECT_FALSE(roc({0.1, 0.2}, {0, 0}).has_value());
  EXPECT_FALSE(roc({}, {}).has_value());
}

TEST(RocAuc, LengthMismatchThrows) {
  EXPECT_THROW(roc({0.1, 0.2}, {1}), ValidationError);
}

TEST(PrAuc, Examples) {
  EXPECT_DOUBLE_EQ(*pr({0.9, 0.8, 0.3, 0.2}, {1, 1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(*pr({0.9, 0.8, 0.3, 0.2}, {0, 0, 0, 1}), 0.25);
  EXPECT_DOUBLE_EQ(*pr({0.9, 0.1, 0.5}, {1, 1, 1}), 1.0);
  EXPECT_FALSE(pr({0.9, 0.1}, {0, 0}).has_value());
}

TEST(PrAuc, TiesFormOneThreshold) {
  // One group holding both labels: precision 1/2 at recall 1.
  EXPECT_DOUBLE_EQ(*pr({0.5, 0.5}, {1, 0}), 0.5);
}

// Every label pattern up to eight samples against the pair-counting and
// threshold-enumeration definitions.
TEST(RankingOracles, ExhaustiveSmallInputs) {
  Rng rng(42);
  for (int n = 1; n <= 8; ++n) {
    for (int mask = 0; mask < (1 << n); ++mask) {
      std::vector<int> y(n);
      for (int i = 0; i < n; ++i) y[i] = (mask >> i) & 1;
      const bool has_pos = mask != 0, has_neg = mask != (1 << n) - 1;
      for (int draw = 0; draw < 20; ++draw) {
        std::vector<double> s(n);
        for (auto& v : s) v = draw % 2 ? std::floor(rng.uniform() * 4) / 4 : rng.uniform();
        const auto r = roc(s, y);
        const auto p = pr(s, y);
        ASSERT_EQ(r.has_value(), has_pos && has_neg);
        ASSERT_EQ(p.has_value(), has_pos);
        if (r) ASSERT_NEAR(*r, oracle::roc_pairs(s, y), 1e-12);
        if (p) ASSERT_NEAR(*p, oracle::average_precision(s, y), 1e-12);
      }
    }
  }
}

TEST(RankingOracles, InvariantUnderMonotoneTransforms) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_index(20));
    std::vector<double> s(n), cube(n), logistic(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = rng.uniform(-2.0, 2.0);
      if (i % 5 == 0 && i > 0) s[i] = s[i - 1];
      cube[i] = s[i] * s[i] * s[i];
      logistic[i] = oracle::sig(s[i]);
      y[i] = rng.uniform() < 0.4;
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(*roc(s, y), *roc(cube, y), 1e-15);
    EXPECT_NEAR(*roc(s, y), *roc(logistic, y), 1e-15);
    EXPECT_NEAR(*pr(s, y), *pr(cube, y), 1e-15);
    EXPECT_NEAR(*pr(s, y), *pr(logistic, y), 1e-15);
  }
}

TEST(Confusion, WorkedExample) {
  ConfusionCounts c{2, 1, 26, 1};
  EXPECT_DOUBLE_EQ(c.precision(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.recall(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.f1(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.accuracy(), 28.0 / 30.0);
  EXPECT_DOUBLE_EQ(c.hamming_loss(), 2.0 / 30.0);
}

TEST(Confusion, ZeroDenominators) {
  ConfusionCounts c{0, 0, 5, 0};
  EXPECT_EQ(c.precision(), 0.0);
  EXPECT_EQ(c.recall(), 0.0);
  EXPECT_EQ(c.f1(), 0.0);
  EXPECT_EQ(ConfusionCounts{}.accuracy(), 0.0);
}

TEST(Thresholded, HammingOfThreeMismatches) {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(2, kNumOrgans);
  Eigen::MatrixXd pred = truth;
  pred(0, 0) = 1;
  pred(1, 4) = 1;
  truth(1, 7) = 1;
  const auto c = thresholded_metrics(pred, truth);
  EXPECT_DOUBLE_EQ(c.micro.hamming_loss(), 0.1);
  EXPECT_EQ(c.micro.fp, 2);
  EXPECT_EQ(c.micro.fn, 1);
  EXPECT_EQ(c.per_organ[7].fn, 1);
}

TEST(Thresholded, PerfectPrediction) {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(3, kNumOrgans);
  truth(0, 1) = truth(2, 14) = 1;
  const auto c = thresholded_metrics(truth, truth);
  EXPECT_EQ(c.micro.accuracy(), 1.0);
  EXPECT_EQ(c.micro.hamming_loss(), 0.0);
  EXPECT_EQ(c.micro.f1(), 1.0);
}

TEST(Thresholded, RejectsWrongShape) {
  EXPECT_THROW(thresholded_metrics(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 3)),
               ValidationError);
}

TEST(Thresholded, MatchesCellCounting) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(12));
    Eigen::MatrixXd pred(n, kNumOrgans), truth(n, kNumOrgans);
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
      pred.data()[i] = rng.uniform() < 0.3;
      truth.data()[i] = rng.uniform() < 0.3;
    }
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < kNumOrgans; ++j) {
        tp += pred(i, j) == 1 && truth(i, j) == 1;
        fp += pred(i, j) == 1 && truth(i, j) == 0;
        tn += pred(i, j) == 0 && truth(i, j) == 0;
        fn += pred(i, j) == 0 && truth(i, j) == 1;
      }
    const auto c = thresholded_metrics(pred, truth).micro;
    EXPECT_EQ(c.tp, tp);
    EXPECT_EQ(c.fp, fp);
    EXPECT_EQ(c.tn, tn);
    EXPECT_EQ(c.fn, fn);
    const double total = static_cast<double>(n * kNumOrgans);
    EXPECT_EQ(c.accuracy(), static_cast<double>(tp + tn) / total);
    EXPECT_EQ(c.hamming_loss(), static_cast<double>(fp + fn) / total);
    EXPECT_EQ(c.accuracy() + c.hamming_loss(), 1.0);
  }
}

Eigen::MatrixXd random_scores(Rng& rng, int n) {
  Eigen::MatrixXd s(n, kNumOrgans);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform();
  return s;
}

TEST(EvaluateScores, PerOrganEqualsSingleColumnMicro) {
  Rng rng(11);
  const int n = 40;
  const Eigen::MatrixXd scores = random_scores(rng, n);
  Eigen::MatrixXd truth(n, kNumOrgans);
  for (Eigen::Index i = 0; i < truth.size(); ++i) truth.data()[i] = rng.uniform() < 0.3;
  const auto report = evaluate_scores(scores, truth);
  EXPECT_EQ(report.n_samples, static_cast<std::size_t>(n));
  for (int j = 0; j < kNumOrgans; ++j) {
    std::vector<double> s(n);
    std::vector<int> y(n);
    ConfusionCounts c;
    for (int i = 0; i < n; ++i) {
      s[i] = scores(i, j);
      y[i] = static_cast<int>(truth(i, j));
      const bool yhat = s[i] >= 0.5;
      c.tp += yhat && y[i];
      c.fp += yhat && !y[i];
      c.tn += !yhat && !y[i];
      c.fn += !yhat && y[i];
    }
    const auto& m = report.per_organ[j];
    EXPECT_EQ(m.roc_auc, roc_auc(s, y));
    EXPECT_EQ(m.pr_auc, pr_auc(s, y));
    EXPECT_EQ(m.accuracy, c.accuracy());
    EXPECT_EQ(m.f1, c.f1());
    EXPECT_EQ(m.hamming_loss, c.hamming_loss());
  }
}

TEST(EvaluateScores, MicroFlattensAllCells) {
  Rng rng(12);
  const int n = 10;
  const Eigen::MatrixXd scores = random_scores(rng, n);
  Eigen::MatrixXd truth(n, kNumOrgans);
  for (Eigen::Index i = 0; i < truth.size(); ++i) truth.data()[i] = rng.uniform() < 0.5;
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < kNumOrgans; ++j) {
      s.push_back(scores(i, j));
      y.push_back(static_cast<int>(truth(i, j)));
    }
  const auto report = evaluate_scores(scores, truth);
  EXPECT_NEAR(*report.micro.roc_auc, oracle::roc_pairs(s, y), 1e-12);
  EXPECT_NEAR(*report.micro.pr_auc, oracle::average_precision(s, y), 1e-12);
  EXPECT_EQ(report.micro.accuracy + report.micro.hamming_loss, 1.0);
}

TEST(EvaluateScores, SingleClassOrganIsAbsent) {
  Rng rng(13);
  const Eigen::MatrixXd scores = random_scores(rng, 6);
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(6, kNumOrgans);
  truth(0, 0) = 1;
  const auto report = evaluate_scores(scores, truth);
  EXPECT_TRUE(report.per_organ[0].roc_auc.has_value());
  EXPECT_FALSE(report.per_organ[1].roc_auc.has_value());
  EXPECT_FALSE(report.per_organ[1].pr_auc.has_value());

  std::ostringstream radar;
  write_radar_tsv(report, radar);
  EXPECT_NE(radar.str().find("\n1\troc_auc"), std::string::npos);
  EXPECT_EQ(radar.str().find("\n2\troc_auc"), std::string::npos);

  const auto j = report_to_json(report);
  EXPECT_TRUE(j.contains("micro"));
  EXPECT_TRUE(j.contains("per_organ"));
}

}  // namespace
}  // namespace xadr
