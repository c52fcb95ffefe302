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
#include <string>
#include <string_view>
#include <utility>

#include "xadr/common.hpp"

namespace xadr {

// One binary ADR indicator per organ system, organ i stored at bits[i-1].
struct LabelVector {
  std::array<std::uint8_t, kNumOrgans> bits{};

  bool any() const {
    for (auto b : bits) {
      if (b) return true;
    }
    return false;
  }
  int count() const {
    int n = 0;
    for (auto b : bits) n += b;
    return n;
  }
  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

enum class Polarity { Positive, Negative };

// Where a triplet came from. Audit only; never a model input.
enum class SampleSource { AdrRecord, Synergy, RandomNegative };

std::string_view polarity_name(Polarity p);
std::string_view source_name(SampleSource s);

// Unordered drug pair stored with first < second.
struct DrugPair {
  std::string first;
  std::string second;

  static DrugPair canonical(std::string a, std::string b) {
    if (b < a) std::swap(a, b);
    return {std::move(a), std::move(b)};
  }
  friend auto operator<=>(const DrugPair&, const DrugPair&) = default;
};

struct Triplet {
  std::string p;
  std::string q;
  LabelVector labels;
  Polarity polarity = Polarity::Positive;
  SampleSource source = SampleSource::AdrRecord;

  DrugPair pair() const { return DrugPair::canonical(p, q); }
  friend bool operator==(const Triplet&, const Triplet&) = default;
};

}  // namespace xadr
