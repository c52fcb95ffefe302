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
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xadr/triplet.hpp"

namespace xadr {

// Negative-sample definition: curated synergy pairs (D) or seeded random
// unrecorded pairs (R).
enum class DatasetMode { D, R };

std::string_view mode_name(DatasetMode m);
DatasetMode parse_mode(std::string_view text);

using AdrRecords = std::map<DrugPair, LabelVector>;
using PairSet = std::set<DrugPair>;

// Number of unordered pairs of distinct drugs, n(n-1)/2.
std::uint64_t combination_count(std::uint64_t n);

struct SampleSets {
  std::vector<Triplet> positives;
  std::vector<Triplet> negatives;
};

SampleSets build_samples(const AdrRecords& records, const PairSet& synergy, DatasetMode mode,
                         const std::vector<std::string>& pool, std::uint64_t seed);

struct DrugPartition {
  std::vector<std::string> train;
  std::vector<std::string> valid;
  std::vector<std::string> test;
};

using SplitRatios = std::array<int, 3>;
// "8:1:1"
SplitRatios parse_ratios(std::string_view text);

// Seeded shuffle of the sorted pool, then contiguous cuts at floor(n*a/s)
// and floor(n*(a+b)/s).
DrugPartition split_drugs(std::vector<std::string> pool, SplitRatios ratios, std::uint64_t seed);

struct DatasetSplit {
  DrugPartition drugs;
  std::vector<Triplet> train;
  std::vector<Triplet> valid;
  std::vector<Triplet> test;
  DatasetMode mode = DatasetMode::R;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

// Keeps triplets whose drugs both fall in the same partition and balances
// polarities in each part by down-sampling the majority.
DatasetSplit assemble_split(const SampleSets& samples, const DrugPartition& partition,
                            DatasetMode mode, std::uint64_t seed);

// Counts mirroring the dataset statistics table.
nlohmann::json split_stats(const DatasetSplit& split);

// `drug1 drug2 b1..b15`; pairs are canonicalized and duplicate rows merged.
AdrRecords load_adr_records(std::istream& in);
AdrRecords load_adr_records(const std::filesystem::path& path);
void write_adr_records(const AdrRecords& records, std::ostream& out);
// `drug1 drug2`
PairSet load_synergy(std::istream& in);
PairSet load_synergy(const std::filesystem::path& path);
void write_synergy(const PairSet& pairs, std::ostream& out);

// `p q b1..b15 polarity`
void write_triplets(const std::vector<Triplet>& triplets, std::ostream& out);
std::vector<Triplet> load_triplets(std::istream& in);
std::vector<Triplet> load_triplets(const std::filesystem::path& path);

}  // namespace xadr
