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
#include <cmath>
#include <limits>

#include "xadr/model.hpp"

namespace xadr {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

RowMatrix row_softmax(const RowMatrix& m) {
  RowMatrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    out.row(i) = (m.row(i).array() - mx).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

bool edge_masked(const KnowledgeGraph& g, const Edge& e, int p, int q,
                 ForwardOptions::AdrMask mask) {
  if (mask == ForwardOptions::AdrMask::None || !g.catalog().is_adr_channel(e.relation)) {
    return false;
  }
  if (mask == ForwardOptions::AdrMask::Pair) {
    return (e.head == p && e.tail == q) || (e.head == q && e.tail == p);
  }
  return e.head == p || e.head == q || e.tail == p || e.tail == q;
}

}  // namespace

RelationAttention relation_attention(const Eigen::VectorXd& f_src, const Eigen::VectorXd& f_dst,
                                     const LayerParams& layer) {
  if (f_src.size() + f_dst.size() != layer.w_rel.cols()) {
    throw ValidationError("relation_attention: context width does not match W_rel");
  }
  RelationAttention r;
  r.context.resize(f_src.size() + f_dst.size());
  r.context << f_src, f_dst;
  r.hidden_pre = layer.w_rel * r.context;
  r.hidden = r.hidden_pre.cwiseMax(0.0);
  r.alpha = sigmoid(layer.w_attn * r.hidden);
  r.scaled = r.alpha.asDiagonal() * layer.relation_emb;
  return r;
}

Eigen::VectorXd FlowTrace::state_at(int layer, int entity) const {
  const auto& fl = layers.at(layer);
  const int s = fl.slot.at(entity);
  if (s < 0) return Eigen::VectorXd::Zero(anchor.size());
  return fl.state.row(s).transpose();
}

RowMatrix FlowTrace::destination_states() const {
  const int L = static_cast<int>(layers.size()) - 1;
  RowMatrix out(L, anchor.size());
  for (int l = 1; l <= L; ++l) out.row(l - 1) = state_at(l, destination).transpose();
  return out;
}

FlowTrace gnn_flow(const KnowledgeGraph& g, int source, int destination,
                   const Eigen::VectorXd& f_src, const Eigen::VectorXd& f_dst, const Model& model,
                   const ForwardOptions& opts) {
  const auto& cfg = model.config;
  const auto& P = model.params;
  const int n = g.num_entities();
  if (source < 0 || source >= n) throw ValidationError("gnn_flow: source not in graph");
  if (destination < 0 || destination >= n) {
    throw ValidationError("gnn_flow: destination not in graph");
  }
  if (g.catalog().size() != cfg.num_relations) {
    throw ValidationError("gnn_flow: graph relation catalog does not match the model");
  }
  const int d = cfg.hidden;
  const bool vector_gate = cfg.gate == GateKind::Vector;

  FlowTrace t;
  t.source = source;
  t.destination = destination;
  t.anchor = P.w_in * f_src;
  t.masked.assign(g.num_edges(), 0);
  if (opts.adr_mask != ForwardOptions::AdrMask::None) {
    const auto& edges = g.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
      t.masked[i] = edge_masked(g, edges[i], source, destination, opts.adr_mask);
    }
  }

  FlowLayer init;
  init.support = {source};
  init.slot.assign(n, -1);
  init.slot[source] = 0;
  init.state = t.anchor.transpose();
  t.layers.push_back(std::move(init));

  // Remaining-hop budget per entity when pruning: reverse BFS from the
  // destination over unmasked edges.
  std::vector<int> to_dest;
  if (opts.prune_to_destination) {
    to_dest.assign(n, std::numeric_limits<int>::max());
    std::vector<int> frontier{destination};
    to_dest[destination] = 0;
    for (int hop = 1; hop <= cfg.layers && !frontier.empty(); ++hop) {
      std::vector<int> next;
      for (int e : frontier) {
        for (int id : g.in_edges(e)) {
          if (t.masked[id]) continue;
          const int head = g.edges()[id].head;
          if (to_dest[head] > hop) {
            to_dest[head] = hop;
            next.push_back(head);
          }
        }
      }
      frontier = std::move(next);
    }
  }

  std::vector<char> mark(n, 0);
  for (int l = 1; l <= cfg.layers; ++l) {
    const auto& lp = P.layers[l - 1];
    t.attention.push_back(relation_attention(f_src, f_dst, lp));
    const RowMatrix& rhat = t.attention.back().scaled;
    const FlowLayer& prev = t.layers.back();

    FlowLayer cur;
    const int budget = cfg.layers - l;
    const auto consider = [&](int e) {
      if (mark[e] || (!to_dest.empty() && to_dest[e] > budget)) return;
      mark[e] = 1;
      cur.support.push_back(e);
    };
    for (int e : prev.support) consider(e);
    for (int e : prev.support) {
      for (int id : g.out_edges(e)) {
        if (!t.masked[id]) consider(g.edges()[id].tail);
      }
    }
    std::sort(cur.support.begin(), cur.support.end());
    cur.slot.assign(n, -1);
    for (std::size_t i = 0; i < cur.support.size(); ++i) {
      cur.slot[cur.support[i]] = static_cast<int>(i);
      mark[cur.support[i]] = 0;
    }

    const auto rows = static_cast<Eigen::Index>(cur.support.size());
    cur.message = RowMatrix::Zero(rows, d);
    for (std::size_t s = 0; s < prev.support.size(); ++s) {
      const int e = prev.support[s];
      for (int id : g.out_edges(e)) {
        if (t.masked[id]) continue;
        const auto& edge = g.edges()[id];
        const int row = cur.slot[edge.tail];
        if (row < 0) continue;
        cur.message.row(row).array() +=
            prev.state.row(s).array() * rhat.row(edge.relation).array();
      }
    }
    cur.pre = cur.message * lp.w_msg.transpose();
    cur.propagated = cur.pre.cwiseMax(0.0);

    RowMatrix anchors = RowMatrix::Zero(rows, d);
    if (cfg.anchor == AnchorScope::AllSupported) {
      anchors.rowwise() = t.anchor.transpose();
    } else if (cur.slot[source] >= 0) {
      anchors.row(cur.slot[source]) = t.anchor.transpose();
    }
    if (opts.forced_gate) {
      cur.gate = RowMatrix::Constant(rows, vector_gate ? d : 1, *opts.forced_gate);
    } else {
      RowMatrix gate_pre = cur.propagated * lp.w_gate.leftCols(d).transpose();
      if (cfg.anchor == AnchorScope::AllSupported) {
        gate_pre.rowwise() += (lp.w_gate.rightCols(d) * t.anchor).transpose();
      } else {
        gate_pre.noalias() += anchors * lp.w_gate.rightCols(d).transpose();
      }
      cur.gate = gate_pre.unaryExpr([](double v) { return sigmoid(v); });
    }
    if (vector_gate) {
      cur.state = cur.gate.cwiseProduct(cur.propagated) +
                  (1.0 - cur.gate.array()).matrix().cwiseProduct(anchors);
    } else {
      cur.state = cur.gate.col(0).asDiagonal() * cur.propagated +
                  (1.0 - cur.gate.col(0).array()).matrix().asDiagonal() * anchors;
    }
    t.layers.push_back(std::move(cur));
  }
  return t;
}

FusionTrace cross_layer_fusion(const RowMatrix& h_p, const RowMatrix& h_q, const Model& model) {
  const int L = static_cast<int>(h_p.rows());
  const int d = static_cast<int>(h_p.cols());
  FusionTrace f;
  f.h_p = h_p;
  f.h_q = h_q;
  f.out = Eigen::VectorXd::Zero(2 * L * d);
  if (model.config.variant == ModelVariant::Ablated2LastLayerOnly) {
    f.out.segment(0, d) = h_p.row(L - 1).transpose();
    f.out.segment(d, d) = h_q.row(L - 1).transpose();
    return f;
  }
  f.projected = h_p * model.params.w_cross.transpose();
  f.attention = row_softmax(f.projected * h_q.transpose() / std::sqrt(static_cast<double>(d)));
  const RowMatrix hp_hat = f.attention * h_q;
  const RowMatrix hq_hat = f.attention.transpose() * h_p;
  f.out.segment(0, L * d) = Eigen::Map<const Eigen::VectorXd>(hp_hat.data(), L * d);
  f.out.segment(L * d, L * d) = Eigen::Map<const Eigen::VectorXd>(hq_hat.data(), L * d);
  return f;
}

AdrSpaceTrace adr_space_forward(const Eigen::VectorXd& h_out1, const Model& model) {
  const auto& cfg = model.config;
  const auto& P = model.params;
  if (h_out1.size() != cfg.fused_dim()) {
    throw ValidationError("adr_space_forward: h_out1 has the wrong length");
  }
  AdrSpaceTrace a;
  a.s1 = sigmoid(P.w_rel1 * h_out1 + P.b_rel1.col(0));

  if (cfg.variant == ModelVariant::Ablated1FixedMatrix) {
    if (model.assoc_matrix.rows() != kNumOrgans || model.assoc_matrix.cols() != kNumOrgans) {
      throw ValidationError("fixed-matrix variant selected without an association matrix");
    }
    a.assoc = model.assoc_matrix * a.s1;
    a.out = P.w_assoc_proj * a.assoc;
    return a;
  }

  const int d2 = cfg.organ_dim;
  const int dh = d2 / cfg.heads;
  a.gates = sigmoid(a.s1);
  a.h_initial = a.gates.asDiagonal() * P.e_plus +
                (1.0 - a.gates.array()).matrix().asDiagonal() * P.e_minus;
  a.q = a.h_initial * P.w_q.transpose();
  a.k = a.h_initial * P.w_k.transpose();
  a.v = a.h_initial * P.w_v.transpose();
  a.attended = RowMatrix::Zero(kNumOrgans, d2);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int h = 0; h < cfg.heads; ++h) {
    const auto qh = a.q.middleCols(h * dh, dh);
    const auto kh = a.k.middleCols(h * dh, dh);
    const auto vh = a.v.middleCols(h * dh, dh);
    a.head_attention.push_back(row_softmax((qh * kh.transpose()) * scale));
    a.attended.middleCols(h * dh, dh) = a.head_attention.back() * vh;
  }
  a.h_attn = a.attended * P.w_o.transpose();
  a.h_refined = (a.h_initial + a.h_attn).array().tanh().matrix();
  a.w_pool = softmax(a.s1);
  a.out = a.h_refined.transpose() * a.w_pool + a.h_initial.colwise().mean().transpose();
  return a;
}

HeadTrace cross_level_head(const Eigen::VectorXd& h_out1, const Eigen::VectorXd& h_out2,
                           const Model& model) {
  const auto& P = model.params;
  HeadTrace h;
  h.h_out2_proj = P.w_t * h_out2;
  h.score = h_out1.cwiseProduct(h.h_out2_proj);
  h.weight = softmax(h.score);
  h.h_out3 = h.weight.cwiseProduct(h_out1);
  h.joint.resize(2 * h_out1.size() + h_out2.size());
  h.joint << h_out1, h_out2, h.h_out3;
  h.logits = P.w_output * h.joint + P.b_output.col(0);
  h.s = sigmoid(h.logits);
  return h;
}

LabelVector predict_labels(const Eigen::VectorXd& s) {
  LabelVector out;
  for (int i = 0; i < kNumOrgans; ++i) out.bits[i] = s[i] >= 0.5 ? 1 : 0;
  return out;
}

PairForward forward_pair(const Model& model, const KnowledgeGraph& g, int p, int q,
                         const Eigen::VectorXd& x_p, const Eigen::VectorXd& x_q,
                         const ForwardOptions& opts) {
  PairForward f;
  f.p = p;
  f.q = q;
  f.feat_p = attend_features_cached(x_p, model.config.segments, model.params.features);
  f.feat_q = attend_features_cached(x_q, model.config.segments, model.params.features);
  f.flow_pq = gnn_flow(g, p, q, f.feat_p.out, f.feat_q.out, model, opts);
  f.flow_qp = gnn_flow(g, q, p, f.feat_q.out, f.feat_p.out, model, opts);
  f.fusion = cross_layer_fusion(f.flow_pq.destination_states(), f.flow_qp.destination_states(),
                                model);
  f.adr = adr_space_forward(f.fusion.out, model);
  f.head = cross_level_head(f.fusion.out, f.adr.out, model);
  return f;
}

}  // namespace xadr
