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

#include <fstream>
#include <sstream>

#include "xadr/model.hpp"

namespace xadr {

std::string_view model_variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::Full:
      return "full";
    case ModelVariant::Ablated1FixedMatrix:
      return "ablated1";
    case ModelVariant::Ablated2LastLayerOnly:
      return "ablated2";
  }
  return "?";
}

ModelVariant parse_model_variant(std::string_view text) {
  if (text == "full") return ModelVariant::Full;
  if (text == "ablated1") return ModelVariant::Ablated1FixedMatrix;
  if (text == "ablated2") return ModelVariant::Ablated2LastLayerOnly;
  throw ValidationError("unknown model variant '" + std::string(text) +
                        "' (expected full, ablated1 or ablated2)");
}

void ModelConfig::validate() const {
  if (layers < 1) throw ValidationError("model: layers must be >= 1");
  if (hidden < 1 || organ_dim < 1 || heads < 1 || num_relations < 1) {
    throw ValidationError("model: widths must be >= 1");
  }
  if (organ_dim % heads != 0) {
    throw ValidationError("model: organ_dim must be divisible by heads");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"layers", layers},
          {"hidden", hidden},
          {"organ_dim", organ_dim},
          {"heads", heads},
          {"segments",
           {{"desc", segments.descriptors},
            {"path", segments.path_fp},
            {"maccs", segments.substructure_keys},
            {"morgan", segments.circular_fp}}},
          {"num_relations", num_relations},
          {"variant", model_variant_name(variant)},
          {"gate", gate == GateKind::Vector ? "vector" : "scalar"},
          {"anchor", anchor == AnchorScope::AllSupported ? "all_supported" : "source_only"}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.layers = j.value("layers", c.layers);
  c.hidden = j.value("hidden", c.hidden);
  c.organ_dim = j.value("organ_dim", c.organ_dim);
  c.heads = j.value("heads", c.heads);
  if (j.contains("segments")) {
    const auto& s = j["segments"];
    c.segments.descriptors = s.value("desc", c.segments.descriptors);
    c.segments.path_fp = s.value("path", c.segments.path_fp);
    c.segments.substructure_keys = s.value("maccs", c.segments.substructure_keys);
    c.segments.circular_fp = s.value("morgan", c.segments.circular_fp);
  }
  c.num_relations = j.value("num_relations", c.num_relations);
  c.variant = parse_model_variant(j.value("variant", std::string("full")));
  const std::string gate = j.value("gate", std::string("vector"));
  if (gate == "vector") {
    c.gate = GateKind::Vector;
  } else if (gate == "scalar") {
    c.gate = GateKind::Scalar;
  } else {
    throw ValidationError("model: gate must be 'vector' or 'scalar'");
  }
  const std::string anchor = j.value("anchor", std::string("all_supported"));
  if (anchor == "all_supported") {
    c.anchor = AnchorScope::AllSupported;
  } else if (anchor == "source_only") {
    c.anchor = AnchorScope::SourceOnly;
  } else {
    throw ValidationError("model: anchor must be 'all_supported' or 'source_only'");
  }
  c.validate();
  return c;
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  cfg.validate();
  using M = Eigen::MatrixXd;
  const int d = cfg.hidden, d2 = cfg.organ_dim, R = cfg.num_relations;
  const int in = cfg.input_dim(), fused = cfg.fused_dim();
  ModelParams p;
  p.features.w_desc = M::Zero(cfg.segments.descriptors, cfg.segments.descriptors);
  p.features.w_keys = M::Zero(cfg.segments.substructure_keys, cfg.segments.substructure_keys);
  p.w_in = M::Zero(d, in);
  p.layers.resize(cfg.layers);
  for (auto& l : p.layers) {
    l.relation_emb = M::Zero(R, d);
    l.w_rel = M::Zero(d, 2 * in);
    l.w_attn = M::Zero(R, d);
    l.w_msg = M::Zero(d, d);
    l.w_gate = M::Zero(cfg.gate == GateKind::Vector ? d : 1, 2 * d);
  }
  if (cfg.variant != ModelVariant::Ablated2LastLayerOnly) p.w_cross = M::Zero(d, d);
  p.w_rel1 = M::Zero(kNumOrgans, fused);
  p.b_rel1 = M::Zero(kNumOrgans, 1);
  if (cfg.variant == ModelVariant::Ablated1FixedMatrix) {
    p.w_assoc_proj = M::Zero(d2, kNumOrgans);
  } else {
    p.e_plus = M::Zero(kNumOrgans, d2);
    p.e_minus = M::Zero(kNumOrgans, d2);
    p.w_q = M::Zero(d2, d2);
    p.w_k = M::Zero(d2, d2);
    p.w_v = M::Zero(d2, d2);
    p.w_o = M::Zero(d2, d2);
  }
  p.w_t = M::Zero(fused, d2);
  p.w_output = M::Zero(kNumOrgans, cfg.head_input_dim());
  p.b_output = M::Zero(kNumOrgans, 1);
  return p;
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = zeros(cfg);
  Rng rng(seed);
  p.for_each([&](const std::string& name, Eigen::MatrixXd& m) {
    if (name.rfind("b_", 0) == 0) return;
    if (name == "e_plus" || name == "e_minus") {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, 0.02);
      return;
    }
    const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
  });
  return p;
}

void ModelParams::for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
  auto visit = [&](const std::string& name, Eigen::MatrixXd& m) {
    if (m.size() > 0) fn(name, m);
  };
  visit("feature.w_desc", features.w_desc);
  visit("feature.w_keys", features.w_keys);
  visit("w_in", w_in);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    visit(pre + "relation_emb", layers[l].relation_emb);
    visit(pre + "w_rel", layers[l].w_rel);
    visit(pre + "w_attn", layers[l].w_attn);
    visit(pre + "w_msg", layers[l].w_msg);
    visit(pre + "w_gate", layers[l].w_gate);
  }
  visit("w_cross", w_cross);
  visit("w_rel1", w_rel1);
  visit("b_rel1", b_rel1);
  visit("e_plus", e_plus);
  visit("e_minus", e_minus);
  visit("attn.w_q", w_q);
  visit("attn.w_k", w_k);
  visit("attn.w_v", w_v);
  visit("attn.w_o", w_o);
  visit("w_assoc_proj", w_assoc_proj);
  visit("w_t", w_t);
  visit("w_output", w_output);
  visit("b_output", b_output);
}

void ModelParams::for_each(
    const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each(
      [&](const std::string& name, Eigen::MatrixXd& m) { fn(name, m); });
}

Eigen::MatrixXd* ModelParams::find(std::string_view name) {
  Eigen::MatrixXd* out = nullptr;
  for_each([&](const std::string& n, Eigen::MatrixXd& m) {
    if (n == name) out = &m;
  });
  return out;
}

void ModelParams::set_zero() {
  for_each([](const std::string&, Eigen::MatrixXd& m) { m.setZero(); });
}

std::size_t ModelParams::num_scalars() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Eigen::MatrixXd& m) { n += m.size(); });
  return n;
}

Model Model::create(const ModelConfig& cfg, std::uint64_t seed,
                    std::optional<Eigen::MatrixXd> assoc) {
  Model m;
  m.config = cfg;
  m.params = ModelParams::init(cfg, seed);
  if (cfg.variant == ModelVariant::Ablated1FixedMatrix) {
    if (!assoc) {
      throw ValidationError("the fixed-matrix variant requires an organ association matrix");
    }
    if (assoc->rows() != kNumOrgans || assoc->cols() != kNumOrgans) {
      throw ValidationError("association matrix must be 15 x 15");
    }
    m.assoc_matrix = *assoc;
  }
  return m;
}

Eigen::MatrixXd load_assoc_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open association matrix " + path.string());
  Eigen::MatrixXd m(kNumOrgans, kNumOrgans);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    if (row >= kNumOrgans) throw ValidationError(path.string() + ": more than 15 rows");
    std::istringstream ls(line);
    int col = 0;
    double v;
    while (ls >> v) {
      if (col >= kNumOrgans) throw ValidationError(path.string() + ": row with more than 15 values");
      m(row, col++) = v;
    }
    if (!ls.eof()) throw ValidationError(path.string() + ": non-numeric entry in row " + std::to_string(row + 1));
    if (col != kNumOrgans) throw ValidationError(path.string() + ": row " + std::to_string(row + 1) + " has " + std::to_string(col) + " values");
    ++row;
  }
  if (row != kNumOrgans) throw ValidationError(path.string() + ": expected 15 rows");
  return m;
}

// ---------------------------------------------------------------------------
// Checkpoint: JSON with the config, the association matrix and every named
// tensor in row-major order.

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json tensor_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

void tensor_from_json(const nlohmann::json& j, Eigen::MatrixXd& m, const std::string& name) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows != m.rows() || cols != m.cols()) {
    throw ValidationError("checkpoint tensor '" + name + "' has shape " + std::to_string(rows) +
                          "x" + std::to_string(cols) + ", expected " + std::to_string(m.rows()) +
                          "x" + std::to_string(m.cols()));
  }
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ValidationError("checkpoint tensor '" + name + "' has the wrong element count");
  }
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
}

}  // namespace

nlohmann::json model_to_json(const Model& m) {
  nlohmann::json tensors = nlohmann::json::object();
  m.params.for_each(
      [&](const std::string& name, const Eigen::MatrixXd& t) { tensors[name] = tensor_json(t); });
  nlohmann::json j = {{"format", "xadr-checkpoint"},
                      {"version", kCheckpointVersion},
                      {"config", m.config.to_json()},
                      {"tensors", tensors}};
  if (m.assoc_matrix.size() > 0) j["assoc_matrix"] = tensor_json(m.assoc_matrix);
  return j;
}

Model model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "xadr-checkpoint") {
    throw ValidationError("not an xadr checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version");
  }
  Model m;
  m.config = ModelConfig::from_json(j.at("config"));
  m.params = ModelParams::zeros(m.config);
  const auto& tensors = j.at("tensors");
  m.params.for_each([&](const std::string& name, Eigen::MatrixXd& t) {
    if (!tensors.contains(name)) throw ValidationError("checkpoint is missing tensor '" + name + "'");
    tensor_from_json(tensors[name], t, name);
  });
  if (m.config.variant == ModelVariant::Ablated1FixedMatrix) {
    m.assoc_matrix = Eigen::MatrixXd::Zero(kNumOrgans, kNumOrgans);
    tensor_from_json(j.at("assoc_matrix"), m.assoc_matrix, "assoc_matrix");
  }
  return m;
}

void save_checkpoint(const Model& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw StageError("cannot write checkpoint " + path.string());
  out << model_to_json(m).dump() << '\n';
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace xadr
