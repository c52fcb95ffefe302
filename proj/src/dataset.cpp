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

#include "xadr/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace xadr {

std::string_view polarity_name(Polarity p) {
  return p == Polarity::Positive ? "positive" : "negative";
}

std::string_view source_name(SampleSource s) {
  switch (s) {
    case SampleSource::AdrRecord:
      return "adr_record";
    case SampleSource::Synergy:
      return "synergy";
    case SampleSource::RandomNegative:
      return "random_negative";
  }
  return "?";
}

std::string_view mode_name(DatasetMode m) { return m == DatasetMode::D ? "d" : "r"; }

DatasetMode parse_mode(std::string_view text) {
  if (text == "d" || text == "D") return DatasetMode::D;
  if (text == "r" || text == "R") return DatasetMode::R;
  throw ValidationError("unknown dataset mode '" + std::string(text) + "' (expected d or r)");
}

std::uint64_t combination_count(std::uint64_t n) { return n * (n - 1) / 2; }

namespace {

// Knuth's selection sampling: k of n indices, uniformly, in increasing order.
std::vector<std::size_t> select_indices(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(k);
  std::size_t needed = k;
  for (std::size_t i = 0; i < n && needed > 0; ++i) {
    if (rng.uniform_index(n - i) < needed) {
      out.push_back(i);
      --needed;
    }
  }
  return out;
}

Triplet negative_triplet(const DrugPair& pair, SampleSource source) {
  return {pair.first, pair.second, LabelVector{}, Polarity::Negative, source};
}

}  // namespace

SampleSets build_samples(const AdrRecords& records, const PairSet& synergy, DatasetMode mode,
                         const std::vector<std::string>& pool, std::uint64_t seed) {
  std::vector<std::string> drugs = pool;
  std::sort(drugs.begin(), drugs.end());
  drugs.erase(std::unique(drugs.begin(), drugs.end()), drugs.end());
  std::unordered_map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < drugs.size(); ++i) rank.emplace(drugs[i], i);

  SampleSets out;
  for (const auto& [pair, labels] : records) {
    if (pair.first == pair.second) {
      throw ValidationError("ADR record pairs a drug with itself: '" + pair.first + "'");
    }
    if (!rank.count(pair.first) || !rank.count(pair.second)) {
      throw ValidationError("ADR record (" + pair.first + ", " + pair.second +
                            ") references a drug outside the pool");
    }
    if (!labels.any()) continue;
    if (mode == DatasetMode::D && synergy.count(pair)) continue;
    out.positives.push_back(
        {pair.first, pair.second, labels, Polarity::Positive, SampleSource::AdrRecord});
  }

  if (mode == DatasetMode::D) {
    if (synergy.empty() && !out.positives.empty()) {
      throw ValidationError("mode D requires synergy pairs to serve as negatives");
    }
    for (const auto& pair : synergy) {
      out.negatives.push_back(negative_triplet(pair, SampleSource::Synergy));
    }
    return out;
  }

  // Mode R: sample from pool pairs with no ADR record, streaming over the
  // complement in canonical order.
  const std::uint64_t n = drugs.size();
  const std::uint64_t recorded = records.size();
  const std::uint64_t complement = combination_count(n) - recorded;
  const std::uint64_t wanted = std::min<std::uint64_t>(out.positives.size(), complement);
  Rng rng(seed);
  std::uint64_t needed = wanted;
  std::uint64_t remaining = complement;
  for (std::uint64_t i = 0; i < n && needed > 0; ++i) {
    for (std::uint64_t j = i + 1; j < n && needed > 0; ++j) {
      DrugPair pair{drugs[i], drugs[j]};
      if (records.count(pair)) continue;
      if (rng.uniform_index(remaining) < needed) {
        out.negatives.push_back(negative_triplet(pair, SampleSource::RandomNegative));
        --needed;
      }
      --remaining;
    }
  }
  return out;
}

SplitRatios parse_ratios(std::string_view text) {
  auto parts = split(std::string(text), ':');
  if (parts.size() != 3) throw ValidationError("ratios must look like 8:1:1");
  SplitRatios r{};
  for (int i = 0; i < 3; ++i) {
    try {
      r[i] = std::stoi(parts[i]);
    } catch (const std::exception&) {
      throw ValidationError("bad ratio component '" + parts[i] + "'");
    }
    if (r[i] < 1) throw ValidationError("ratio components must be positive");
  }
  return r;
}

DrugPartition split_drugs(std::vector<std::string> pool, SplitRatios ratios, std::uint64_t seed) {
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  if (pool.size() < 3) {
    throw ValidationError("drug pool too small to split: " + std::to_string(pool.size()) +
                          " drugs, need at least 3");
  }
  Rng rng(seed);
  rng.shuffle(pool);
  const std::size_t n = pool.size();
  const std::size_t total = ratios[0] + ratios[1] + ratios[2];
  const std::size_t n_train = n * ratios[0] / total;
  const std::size_t n_valid = n * (ratios[0] + ratios[1]) / total - n_train;
  DrugPartition out;
  out.train.assign(pool.begin(), pool.begin() + n_train);
  out.valid.assign(pool.begin() + n_train, pool.begin() + n_train + n_valid);
  out.test.assign(pool.begin() + n_train + n_valid, pool.end());
  return out;
}

DatasetSplit assemble_split(const SampleSets& samples, const DrugPartition& partition,
                            DatasetMode mode, std::uint64_t seed) {
  DatasetSplit split;
  split.drugs = partition;
  split.mode = mode;
  split.seed = seed;

  std::unordered_map<std::string, int> part_of;
  const std::vector<std::string>* parts[3] = {&partition.train, &partition.valid, &partition.test};
  for (int k = 0; k < 3; ++k) {
    for (const auto& d : *parts[k]) {
      if (!part_of.emplace(d, k).second) {
        throw ValidationError("drug '" + d + "' appears in more than one partition");
      }
    }
  }
  auto part = [&](const Triplet& t) {
    auto a = part_of.find(t.p);
    auto b = part_of.find(t.q);
    if (a == part_of.end() || b == part_of.end() || a->second != b->second) return -1;
    return a->second;
  };

  std::array<std::vector<Triplet>, 3> pos, neg;
  for (const auto& t : samples.positives) {
    if (int k = part(t); k >= 0) pos[k].push_back(t);
  }
  for (const auto& t : samples.negatives) {
    if (int k = part(t); k >= 0) neg[k].push_back(t);
  }

  Rng rng(seed);
  const char* names[3] = {"train", "valid", "test"};
  std::vector<Triplet>* outs[3] = {&split.train, &split.valid, &split.test};
  for (int k = 0; k < 3; ++k) {
    auto& major = pos[k].size() >= neg[k].size() ? pos[k] : neg[k];
    const std::size_t keep = std::min(pos[k].size(), neg[k].size());
    if (major.size() > keep) {
      std::vector<Triplet> kept;
      kept.reserve(keep);
      for (auto i : select_indices(major.size(), keep, rng)) kept.push_back(std::move(major[i]));
      major = std::move(kept);
    }
    outs[k]->insert(outs[k]->end(), pos[k].begin(), pos[k].end());
    outs[k]->insert(outs[k]->end(), neg[k].begin(), neg[k].end());
    if (outs[k]->empty()) {
      split.warnings.push_back(std::string(names[k]) + " split is empty after filtering");
    }
  }
  return split;
}

nlohmann::json split_stats(const DatasetSplit& split) {
  auto count_pos = [](const std::vector<Triplet>& v) {
    return std::count_if(v.begin(), v.end(),
                         [](const Triplet& t) { return t.polarity == Polarity::Positive; });
  };
  return {{"mode", mode_name(split.mode)},
          {"seed", split.seed},
          {"train_drugs", split.drugs.train.size()},
          {"valid_drugs", split.drugs.valid.size()},
          {"test_drugs", split.drugs.test.size()},
          {"train_triplets", split.train.size()},
          {"valid_triplets", split.valid.size()},
          {"test_triplets", split.test.size()},
          {"train_positives", count_pos(split.train)},
          {"valid_positives", count_pos(split.valid)},
          {"test_positives", count_pos(split.test)},
          {"warnings", split.warnings}};
}

// ---------------------------------------------------------------------------
// TSV I/O

namespace {

bool is_header(const std::vector<std::string>& f, const char* first) {
  return !f.empty() && trim(f[0]) == first;
}

LabelVector parse_bits(const std::vector<std::string>& f, std::size_t offset, int line_no) {
  LabelVector lv;
  for (int i = 0; i < kNumOrgans; ++i) {
    const std::string v = trim(f[offset + i]);
    if (v == "0") {
      lv.bits[i] = 0;
    } else if (v == "1") {
      lv.bits[i] = 1;
    } else {
      throw ValidationError("line " + std::to_string(line_no) + ": label b" +
                            std::to_string(i + 1) + " must be 0 or 1, got '" + v + "'");
    }
  }
  return lv;
}

template <typename Fn>
void for_each_row(std::istream& in, const char* header_key, Fn fn) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    auto f = split(line, '\t');
    if (line_no == 1 && is_header(f, header_key)) continue;
    fn(f, line_no);
  }
}

std::ifstream open_or_throw(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ValidationError(std::string("cannot open ") + what + " " + path.string());
  return in;
}

}  // namespace

AdrRecords load_adr_records(std::istream& in) {
  AdrRecords out;
  for_each_row(in, "drug1", [&](const std::vector<std::string>& f, int line_no) {
    if (f.size() != 2 + kNumOrgans) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(2 + kNumOrgans) + " fields, got " +
                            std::to_string(f.size()));
    }
    const std::string a = trim(f[0]), b = trim(f[1]);
    if (a == b) {
      throw ValidationError("line " + std::to_string(line_no) + ": self-paired drug '" + a + "'");
    }
    auto bits = parse_bits(f, 2, line_no);
    auto& slot = out[DrugPair::canonical(a, b)];
    for (int i = 0; i < kNumOrgans; ++i) slot.bits[i] |= bits.bits[i];
  });
  return out;
}

AdrRecords load_adr_records(const std::filesystem::path& path) {
  auto in = open_or_throw(path, "ADR record file");
  return load_adr_records(in);
}

void write_adr_records(const AdrRecords& records, std::ostream& out) {
  out << "drug1\tdrug2";
  for (int i = 1; i <= kNumOrgans; ++i) out << "\tb" << i;
  out << '\n';
  for (const auto& [pair, lv] : records) {
    out << pair.first << '\t' << pair.second;
    for (auto b : lv.bits) out << '\t' << int(b);
    out << '\n';
  }
}

PairSet load_synergy(std::istream& in) {
  PairSet out;
  for_each_row(in, "drug1", [&](const std::vector<std::string>& f, int line_no) {
    if (f.size() != 2) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 2 fields, got " +
                            std::to_string(f.size()));
    }
    const std::string a = trim(f[0]), b = trim(f[1]);
    if (a == b) {
      throw ValidationError("line " + std::to_string(line_no) + ": self-paired drug '" + a + "'");
    }
    out.insert(DrugPair::canonical(a, b));
  });
  return out;
}

PairSet load_synergy(const std::filesystem::path& path) {
  auto in = open_or_throw(path, "synergy file");
  return load_synergy(in);
}

void write_synergy(const PairSet& pairs, std::ostream& out) {
  out << "drug1\tdrug2\n";
  for (const auto& p : pairs) out << p.first << '\t' << p.second << '\n';
}

void write_triplets(const std::vector<Triplet>& triplets, std::ostream& out) {
  out << "p\tq";
  for (int i = 1; i <= kNumOrgans; ++i) out << "\tb" << i;
  out << "\tpolarity\n";
  for (const auto& t : triplets) {
    out << t.p << '\t' << t.q;
    for (auto b : t.labels.bits) out << '\t' << int(b);
    out << '\t' << polarity_name(t.polarity) << '\n';
  }
}

std::vector<Triplet> load_triplets(std::istream& in) {
  std::vector<Triplet> out;
  for_each_row(in, "p", [&](const std::vector<std::string>& f, int line_no) {
    if (f.size() != 3 + kNumOrgans) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(3 + kNumOrgans) + " fields, got " +
                            std::to_string(f.size()));
    }
    Triplet t;
    auto pair = DrugPair::canonical(trim(f[0]), trim(f[1]));
    if (pair.first == pair.second) {
      throw ValidationError("line " + std::to_string(line_no) + ": self-paired triplet");
    }
    t.p = pair.first;
    t.q = pair.second;
    t.labels = parse_bits(f, 2, line_no);
    const std::string pol = trim(f[2 + kNumOrgans]);
    if (pol == "positive") {
      t.polarity = Polarity::Positive;
    } else if (pol == "negative") {
      t.polarity = Polarity::Negative;
      t.source = SampleSource::RandomNegative;
    } else {
      throw ValidationError("line " + std::to_string(line_no) + ": bad polarity '" + pol + "'");
    }
    out.push_back(std::move(t));
  });
  return out;
}

std::vector<Triplet> load_triplets(const std::filesystem::path& path) {
  auto in = open_or_throw(path, "triplet file");
  return load_triplets(in);
}

}  // namespace xadr
