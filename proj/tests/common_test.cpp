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

#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "xadr/common.hpp"

namespace xadr {
namespace {

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs |= x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, MatchesReferenceEngine) {
  // The raw stream is the standard 64-bit Mersenne twister, so files written
  // from it are portable.
  Rng r(5489);
  std::mt19937_64 ref(5489);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(r.next(), ref());
}

TEST(Rng, Ranges) {
  Rng r(1);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = r.uniform_index(7);
    ASSERT_LT(k, 7u);
    ++hits[k];
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double w = r.uniform(-2.0, 3.0);
    ASSERT_GE(w, -2.0);
    ASSERT_LT(w, 3.0);
  }
  for (int h : hits) EXPECT_GT(h, 850);
  EXPECT_EQ(r.uniform_index(0), 0u);
  EXPECT_EQ(r.uniform_index(1), 0u);
}

TEST(Rng, NormalMoments) {
  Rng r(2);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal(1.5, 2.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 1.5, 0.02);
  EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 2.0, 0.02);
}

TEST(Rng, ShuffleIsSeededPermutation) {
  std::vector<int> v(50), w;
  std::iota(v.begin(), v.end(), 0);
  w = v;
  Rng a(9), b(9);
  a.shuffle(v);
  b.shuffle(w);
  EXPECT_EQ(v, w);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  std::vector<int> empty;
  a.shuffle(empty);
  EXPECT_TRUE(empty.empty());
}

TEST(Strings, SplitKeepsEmptyFields) {
  EXPECT_EQ(split("a\tb\t\tc", '\t'), (std::vector<std::string>{"a", "b", "", "c"}));
  EXPECT_EQ(split("", ','), (std::vector<std::string>{""}));
  EXPECT_EQ(split("x,", ','), (std::vector<std::string>{"x", ""}));
}

TEST(Strings, Trim) {
  EXPECT_EQ(trim("  a b \t\r\n"), "a b");
  EXPECT_EQ(trim(""), "");
  EXPECT_EQ(trim(" \t "), "");
  EXPECT_EQ(trim("x"), "x");
}

}  // namespace
}  // namespace xadr
