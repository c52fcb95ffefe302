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
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "xadr/metrics.hpp"

namespace xadr {

namespace {

struct Moments {
  double n, mean, var;  // sample variance (n - 1 denominator)
};

Moments moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {n, mean, ss / (n - 1.0)};
}

}  // namespace

std::string significance_tier(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "ns";
}

SignificanceResult compare_runs(std::span<const double> runs_1, std::span<const double> runs_2) {
  if (runs_1.size() < 2 || runs_2.size() < 2) {
    throw ValidationError("compare_runs needs at least 2 runs per side");
  }
  const auto a = moments(runs_1);
  const auto b = moments(runs_2);
  SignificanceResult r;
  r.mean_1 = a.mean;
  r.mean_2 = b.mean;
  const double diff = a.mean - b.mean;
  const double se2 = a.var / a.n + b.var / b.n;
  const double pooled = std::sqrt(((a.n - 1.0) * a.var + (b.n - 1.0) * b.var) / (a.n + b.n - 2.0));

  if (se2 == 0.0) {
    r.dof = a.n + b.n - 2.0;
    if (diff == 0.0) {
      r.t_statistic = 0.0;
      r.p_value = 1.0;
      r.cohens_d = 0.0;
    } else {
      const double inf = std::numeric_limits<double>::infinity();
      r.t_statistic = diff > 0 ? inf : -inf;
      r.p_value = 0.0;
      r.cohens_d = r.t_statistic;
    }
    r.tier = significance_tier(r.p_value);
    return r;
  }

  r.t_statistic = diff / std::sqrt(se2);
  const double qa = a.var / a.n, qb = b.var / b.n;
  r.dof = se2 * se2 / (qa * qa / (a.n - 1.0) + qb * qb / (b.n - 1.0));
  boost::math::students_t dist(r.dof);
  r.p_value = 2.0 * boost::math::cdf(dist, -std::abs(r.t_statistic));
  r.cohens_d = diff / pooled;
  r.tier = significance_tier(r.p_value);
  return r;
}

}  // namespace xadr
