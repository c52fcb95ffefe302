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

#include "xadr/features.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace xadr {

std::string SegmentSpec::header() const {
  std::ostringstream os;
  os << "#segments desc=" << descriptors << ",path=" << path_fp << ",maccs=" << substructure_keys
     << ",morgan=" << circular_fp;
  return os.str();
}

SegmentSpec SegmentSpec::parse_header(const std::string& line) {
  const std::string prefix = "#segments";
  const std::string t = trim(line);
  if (t.rfind(prefix, 0) != 0) {
    throw ValidationError("feature file: first line must be '#segments desc=..,path=..,maccs=..,morgan=..'");
  }
  SegmentSpec s{0, 0, 0, 0};
  bool have[4] = {false, false, false, false};
  for (const auto& part : split(trim(t.substr(prefix.size())), ',')) {
    auto kv = split(trim(part), '=');
    if (kv.size() != 2) throw ValidationError("feature file: bad segment entry '" + part + "'");
    int n = 0;
    try {
      n = std::stoi(kv[1]);
    } catch (const std::exception&) {
      throw ValidationError("feature file: bad segment length '" + kv[1] + "'");
    }
    if (n < 1) throw ValidationError("feature file: segment '" + kv[0] + "' must be positive");
    const std::string key = trim(kv[0]);
    if (key == "desc") {
      s.descriptors = n, have[0] = true;
    } else if (key == "path") {
      s.path_fp = n, have[1] = true;
    } else if (key == "maccs") {
      s.substructure_keys = n, have[2] = true;
    } else if (key == "morgan") {
      s.circular_fp = n, have[3] = true;
    } else {
      throw ValidationError("feature file: unknown segment '" + key + "'");
    }
  }
  for (bool h : have) {
    if (!h) throw ValidationError("feature file: header must declare desc, path, maccs and morgan");
  }
  return s;
}

void FeatureTable::add(DrugFeatureVector v) {
  if (v.values.size() != spec_.total()) {
    throw ValidationError("drug '" + v.drug_id + "': expected " + std::to_string(spec_.total()) +
                          " values, got " + std::to_string(v.values.size()));
  }
  struct Binary {
    const char* name;
    int offset;
    int length;
  };
  const Binary binaries[] = {{"path_fp", spec_.path_offset(), spec_.path_fp},
                             {"substructure_keys", spec_.keys_offset(), spec_.substructure_keys},
                             {"circular_fp", spec_.circular_offset(), spec_.circular_fp}};
  for (const auto& seg : binaries) {
    for (int i = 0; i < seg.length; ++i) {
      const double x = v.values[seg.offset + i];
      if (x != 0.0 && x != 1.0) {
        std::ostringstream os;
        os << "drug '" << v.drug_id << "': non-binary value " << x << " in segment " << seg.name
           << " at column " << (seg.offset + i + 1);
        throw ValidationError(os.str());
      }
    }
  }
  for (int i = 0; i < spec_.descriptors; ++i) {
    if (!std::isfinite(v.values[i])) {
      throw ValidationError("drug '" + v.drug_id + "': non-finite descriptor at column " +
                            std::to_string(i + 1));
    }
  }
  if (rows_.count(v.drug_id)) throw ValidationError("duplicate drug_id '" + v.drug_id + "'");
  std::string id = v.drug_id;
  rows_.emplace(std::move(id), std::move(v));
}

const DrugFeatureVector& FeatureTable::at(const std::string& id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) throw ValidationError("no features for drug '" + id + "'");
  return it->second;
}

FeatureTable load_features(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("feature file is empty");
  FeatureTable table(SegmentSpec::parse_header(line));
  const int total = table.spec().total();
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    DrugFeatureVector v;
    ls >> v.drug_id;
    std::vector<double> vals;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ValidationError("line " + std::to_string(line_no) + ": bad number '" + tok + "'");
      }
    }
    if (static_cast<int>(vals.size()) != total) {
      throw ValidationError("line " + std::to_string(line_no) + ": drug '" + v.drug_id +
                            "' has " + std::to_string(vals.size()) + " values, expected " +
                            std::to_string(total));
    }
    v.values = Eigen::Map<Eigen::VectorXd>(vals.data(), total);
    try {
      table.add(std::move(v));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

FeatureTable load_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open feature file " + path.string());
  try {
    return load_features(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

FeatureTable load_features(const std::filesystem::path& path, const SegmentSpec& expected) {
  auto t = load_features(path);
  if (!(t.spec() == expected)) {
    throw ValidationError(path.string() + ": segment header " + t.spec().header() +
                          " does not match expected " + expected.header());
  }
  return t;
}

void write_features(const FeatureTable& table, std::ostream& out) {
  out << table.spec().header() << '\n';
  out << std::setprecision(17);
  for (const auto& [id, v] : table.rows()) {
    out << id;
    for (Eigen::Index i = 0; i < v.values.size(); ++i) out << '\t' << v.values[i];
    out << '\n';
  }
}

FeatureTable synthetic_features(int n_drugs, std::uint64_t seed, SegmentSpec spec) {
  Rng rng(seed);
  FeatureTable t(spec);
  for (int d = 0; d < n_drugs; ++d) {
    char id[16];
    std::snprintf(id, sizeof id, "D%04d", d);
    Eigen::VectorXd v(spec.total());
    for (int i = 0; i < spec.descriptors; ++i) v[i] = rng.normal();
    for (int i = spec.descriptors; i < spec.total(); ++i) v[i] = rng.uniform() < 0.1 ? 1.0 : 0.0;
    t.add({id, std::move(v)});
  }
  return t;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const double m = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - m).exp();
  return e / e.sum();
}

AttendedFeatures attend_features_cached(const Eigen::VectorXd& x, const SegmentSpec& spec,
                                        const FeatureAttentionParams& p) {
  if (x.size() != spec.total() || p.w_desc.rows() != spec.descriptors ||
      p.w_desc.cols() != spec.descriptors || p.w_keys.rows() != spec.substructure_keys ||
      p.w_keys.cols() != spec.substructure_keys) {
    throw ValidationError("attend_features: dimension mismatch");
  }
  AttendedFeatures r;
  r.out = x;
  const auto desc = x.segment(0, spec.descriptors);
  r.weights_desc = softmax(p.w_desc * desc);
  r.out.segment(0, spec.descriptors) = desc.cwiseProduct(r.weights_desc);
  const auto keys = x.segment(spec.keys_offset(), spec.substructure_keys);
  r.weights_keys = softmax(p.w_keys * keys);
  r.out.segment(spec.keys_offset(), spec.substructure_keys) = keys.cwiseProduct(r.weights_keys);
  return r;
}

Eigen::VectorXd attend_features(const DrugFeatureVector& v, const SegmentSpec& spec,
                                const FeatureAttentionParams& p) {
  return attend_features_cached(v.values, spec, p).out;
}

namespace {

void attended_segment_backward(const Eigen::VectorXd& x, const Eigen::VectorXd& w,
                               const Eigen::VectorXd& d_e, Eigen::MatrixXd& grad_w) {
  const Eigen::VectorXd d_w = x.cwiseProduct(d_e);
  const Eigen::VectorXd d_z = w.cwiseProduct((d_w.array() - w.dot(d_w)).matrix());
  grad_w.noalias() += d_z * x.transpose();
}

}  // namespace

void attend_features_backward(const Eigen::VectorXd& x, const SegmentSpec& spec,
                              const FeatureAttentionParams& /*p*/, const AttendedFeatures& cache,
                              const Eigen::VectorXd& d_out, FeatureAttentionParams& grad) {
  attended_segment_backward(x.segment(0, spec.descriptors), cache.weights_desc,
                            d_out.segment(0, spec.descriptors), grad.w_desc);
  attended_segment_backward(x.segment(spec.keys_offset(), spec.substructure_keys),
                            cache.weights_keys,
                            d_out.segment(spec.keys_offset(), spec.substructure_keys), grad.w_keys);
}

}  // namespace xadr
