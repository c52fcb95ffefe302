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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "xadr/features.hpp"
#include "xadr/kg.hpp"
#include "xadr/triplet.hpp"

namespace xadr {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ModelVariant { Full, Ablated1FixedMatrix, Ablated2LastLayerOnly };
enum class GateKind { Vector, Scalar };
// Which supported entities are pulled toward the projected source features.
enum class AnchorScope { AllSupported, SourceOnly };

std::string_view model_variant_name(ModelVariant v);
// "full", "ablated1", "ablated2".
ModelVariant parse_model_variant(std::string_view text);

struct ModelConfig {
  int layers = 3;
  int hidden = 32;     // GNN width
  int organ_dim = 32;  // ADR embedding width
  int heads = 4;       // organ self-attention heads
  SegmentSpec segments;
  int num_relations = RelationCatalog::builtin().size();
  ModelVariant variant = ModelVariant::Full;
  GateKind gate = GateKind::Vector;
  AnchorScope anchor = AnchorScope::AllSupported;

  int input_dim() const { return segments.total(); }
  int fused_dim() const { return 2 * layers * hidden; }
  int head_input_dim() const { return 2 * fused_dim() + organ_dim; }
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct LayerParams {
  Eigen::MatrixXd relation_emb;  // R x d
  Eigen::MatrixXd w_rel;         // d x 2*input
  Eigen::MatrixXd w_attn;        // R x d
  Eigen::MatrixXd w_msg;         // d x d
  Eigen::MatrixXd w_gate;        // d x 2d, or 1 x 2d for the scalar gate
};

// Every trainable tensor. Tensors a variant does not use stay empty.
struct ModelParams {
  FeatureAttentionParams features;
  Eigen::MatrixXd w_in;  // d x input
  std::vector<LayerParams> layers;
  Eigen::MatrixXd w_cross;  // d x d
  Eigen::MatrixXd w_rel1;   // 15 x 2dL
  Eigen::MatrixXd b_rel1;   // 15 x 1
  Eigen::MatrixXd e_plus;   // 15 x d2
  Eigen::MatrixXd e_minus;  // 15 x d2
  Eigen::MatrixXd w_q, w_k, w_v, w_o;  // d2 x d2
  Eigen::MatrixXd w_assoc_proj;        // d2 x 15, fixed-matrix variant
  Eigen::MatrixXd w_t;                 // 2dL x d2
  Eigen::MatrixXd w_output;            // 15 x (4dL + d2)
  Eigen::MatrixXd b_output;            // 15 x 1

  // Zero tensors with the shapes `cfg` requires.
  static ModelParams zeros(const ModelConfig& cfg);
  // Xavier-uniform matrices, zero biases, N(0, 0.02) ADR embeddings.
  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);

  // Visits non-empty tensors in a fixed order.
  void for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
  void for_each(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;
  Eigen::MatrixXd* find(std::string_view name);
  void set_zero();
  std::size_t num_scalars() const;
};

struct Model {
  ModelConfig config;
  ModelParams params;
  // 15 x 15 organ association matrix for the fixed-matrix variant.
  Eigen::MatrixXd assoc_matrix;

  static Model create(const ModelConfig& cfg, std::uint64_t seed,
                      std::optional<Eigen::MatrixXd> assoc = std::nullopt);
};

// 15 x 15 numeric TSV.
Eigen::MatrixXd load_assoc_matrix(const std::filesystem::path& path);

struct ForwardOptions {
  // Test hook: overrides every gate value.
  std::optional<double> forced_gate;
  // ADR-channel edges hidden from the query's flows. QueryDrugs hides every
  // ADR edge touching either query drug, so training queries see the same
  // neighborhood shape as queries about drugs held out of training.
  enum class AdrMask { None, Pair, QueryDrugs };
  AdrMask adr_mask = AdrMask::QueryDrugs;
  // Keep only entities that can still reach the destination in the
  // remaining layers. Destination states are unchanged; the trace then holds
  // fewer entities, so attribution and support checks run without it.
  bool prune_to_destination = false;
};

// --- relation attention ------------------------------------------------------

struct RelationAttention {
  Eigen::VectorXd context;  // [f_src; f_dst]
  Eigen::VectorXd hidden_pre;
  Eigen::VectorXd hidden;
  Eigen::VectorXd alpha;  // one score per relation
  RowMatrix scaled;       // alpha (.) relation embeddings, R x d
};

RelationAttention relation_attention(const Eigen::VectorXd& f_src, const Eigen::VectorXd& f_dst,
                                     const LayerParams& layer);

// --- gated residual flow -----------------------------------------------------

struct FlowLayer {
  std::vector<int> support;  // entity indices, ascending
  std::vector<int> slot;     // entity -> row in the matrices below, -1 if absent
  RowMatrix message;         // sum of neighbor states times scaled relation
  RowMatrix pre;             // W * message
  RowMatrix propagated;      // ReLU(pre)
  RowMatrix gate;            // |support| x d, or x 1
  RowMatrix state;
};

struct FlowTrace {
  int source = -1;
  int destination = -1;
  Eigen::VectorXd anchor;  // W_in f_src
  std::vector<RelationAttention> attention;  // per layer 1..L
  std::vector<FlowLayer> layers;             // index 0 is the initial state
  std::vector<char> masked;                  // per edge

  // State of `entity` after `layer`; zero outside the support.
  Eigen::VectorXd state_at(int layer, int entity) const;
  // L x d readout at the destination for layers 1..L.
  RowMatrix destination_states() const;
};

FlowTrace gnn_flow(const KnowledgeGraph& g, int source, int destination,
                   const Eigen::VectorXd& f_src, const Eigen::VectorXd& f_dst,
                   const Model& model, const ForwardOptions& opts = {});

// --- cross-layer fusion ------------------------------------------------------

struct FusionTrace {
  RowMatrix h_p, h_q;  // L x d
  RowMatrix projected;  // rows W_cross h_p
  RowMatrix attention;  // L x L, row softmax
  Eigen::VectorXd out;  // 2dL
};

FusionTrace cross_layer_fusion(const RowMatrix& h_p, const RowMatrix& h_q, const Model& model);

// --- learnable ADR space -----------------------------------------------------

struct AdrSpaceTrace {
  Eigen::VectorXd s1;      // 15
  Eigen::VectorXd gates;   // sigmoid(s1)
  RowMatrix h_initial;     // 15 x d2
  RowMatrix q, k, v;       // 15 x d2
  std::vector<RowMatrix> head_attention;  // per head 15 x 15
  RowMatrix attended;      // concatenated heads before output projection
  RowMatrix h_attn;
  RowMatrix h_refined;
  Eigen::VectorXd w_pool;  // softmax(s1)
  Eigen::VectorXd assoc;   // M s1, fixed-matrix variant only
  Eigen::VectorXd out;     // h_out2, d2
};

AdrSpaceTrace adr_space_forward(const Eigen::VectorXd& h_out1, const Model& model);

// --- cross-level head --------------------------------------------------------

struct HeadTrace {
  Eigen::VectorXd h_out2_proj;  // W_t h_out2
  Eigen::VectorXd score;        // A_score
  Eigen::VectorXd weight;       // A_weight
  Eigen::VectorXd h_out3;
  Eigen::VectorXd joint;        // E
  Eigen::VectorXd logits;
  Eigen::VectorXd s;            // sigmoid(logits)
};

HeadTrace cross_level_head(const Eigen::VectorXd& h_out1, const Eigen::VectorXd& h_out2,
                           const Model& model);

LabelVector predict_labels(const Eigen::VectorXd& s);

// --- full pair forward -------------------------------------------------------

struct PairForward {
  int p = -1, q = -1;
  AttendedFeatures feat_p, feat_q;
  FlowTrace flow_pq, flow_qp;
  FusionTrace fusion;
  AdrSpaceTrace adr;
  HeadTrace head;

  const Eigen::VectorXd& scores() const { return head.s; }
};

PairForward forward_pair(const Model& model, const KnowledgeGraph& g, int p, int q,
                         const Eigen::VectorXd& x_p, const Eigen::VectorXd& x_q,
                         const ForwardOptions& opts = {});

// Defers rank-1 updates `target += left * right^T` so that many of them
// are applied as one matrix product.
class OuterProductBuffer {
 public:
  void add(Eigen::MatrixXd& target, const Eigen::VectorXd& left, const Eigen::VectorXd& right);
  // Applies and clears every pending update.
  void flush();

 private:
  struct Pending {
    Eigen::MatrixXd* target;
    Eigen::MatrixXd left, right;  // one column per update
    Eigen::Index count = 0;
  };
  std::vector<Pending> pending_;
};

// Accumulates dLoss/dparams into `grad` given dLoss/dlogits. With `outer`,
// the wide input-side outer products are queued there instead; flush it
// before reading `grad`.
void backward_pair(const Model& model, const KnowledgeGraph& g, const Eigen::VectorXd& x_p,
                   const Eigen::VectorXd& x_q, const PairForward& fwd,
                   const Eigen::VectorXd& d_logits, ModelParams& grad,
                   const ForwardOptions& opts = {}, OuterProductBuffer* outer = nullptr);

// --- checkpoint --------------------------------------------------------------

nlohmann::json model_to_json(const Model& m);
Model model_from_json(const nlohmann::json& j);
void save_checkpoint(const Model& m, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace xadr
