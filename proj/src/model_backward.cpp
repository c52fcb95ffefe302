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

// Reverse-mode gradients for the pair forward in model.cpp. Each *_backward
// mirrors one forward stage and accumulates into `grad`.

#include <algorithm>
#include <cmath>

#include "xadr/model.hpp"

namespace xadr {

namespace {

// d(softmax)/dz applied to an upstream gradient.
Eigen::VectorXd softmax_backward(const Eigen::VectorXd& w, const Eigen::VectorXd& dw) {
  return w.cwiseProduct((dw.array() - w.dot(dw)).matrix());
}

RowMatrix row_softmax_backward(const RowMatrix& a, const RowMatrix& da) {
  RowMatrix out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double dot = a.row(i).dot(da.row(i));
    out.row(i) = a.row(i).array() * (da.row(i).array() - dot);
  }
  return out;
}

void add_outer(Eigen::MatrixXd& target, const Eigen::VectorXd& left,
               const Eigen::VectorXd& right, OuterProductBuffer* outer) {
  if (outer) {
    outer->add(target, left, right);
  } else {
    target.noalias() += left * right.transpose();
  }
}

void relation_attention_backward(const RelationAttention& ra, const LayerParams& lp,
                                 const RowMatrix& d_scaled, LayerParams& grad,
                                 Eigen::VectorXd& d_context, OuterProductBuffer* outer) {
  Eigen::VectorXd d_alpha(ra.alpha.size());
  for (Eigen::Index r = 0; r < ra.alpha.size(); ++r) {
    grad.relation_emb.row(r) += ra.alpha[r] * d_scaled.row(r);
    d_alpha[r] = d_scaled.row(r).dot(lp.relation_emb.row(r));
  }
  const Eigen::VectorXd d_logit =
      d_alpha.cwiseProduct(ra.alpha.cwiseProduct((1.0 - ra.alpha.array()).matrix()));
  grad.w_attn.noalias() += d_logit * ra.hidden.transpose();
  Eigen::VectorXd d_hidden = lp.w_attn.transpose() * d_logit;
  for (Eigen::Index i = 0; i < d_hidden.size(); ++i) {
    if (ra.hidden_pre[i] <= 0.0) d_hidden[i] = 0.0;
  }
  add_outer(grad.w_rel, d_hidden, ra.context, outer);
  d_context.noalias() += lp.w_rel.transpose() * d_hidden;
}

// d_dest holds dLoss/dh at the destination for layers 1..L. Adds the
// gradients w.r.t. the attended source/destination features to d_src/d_dst.
void flow_backward(const KnowledgeGraph& g, const Model& model, const FlowTrace& t,
                   const RowMatrix& d_dest, const ForwardOptions& opts, ModelParams& grad,
                   Eigen::VectorXd& d_src, Eigen::VectorXd& d_dst, OuterProductBuffer* outer) {
  const auto& cfg = model.config;
  const auto& P = model.params;
  const int d = cfg.hidden;
  const int L = cfg.layers;
  const int in = cfg.input_dim();
  const bool vector_gate = cfg.gate == GateKind::Vector;

  Eigen::VectorXd d_anchor = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd d_context = Eigen::VectorXd::Zero(2 * in);

  // Gradient w.r.t. states of the current layer, rows follow its support.
  RowMatrix d_state = RowMatrix::Zero(t.layers[L].support.size(), d);
  for (int l = L; l >= 1; --l) {
    const FlowLayer& cur = t.layers[l];
    const FlowLayer& prev = t.layers[l - 1];
    const auto& lp = P.layers[l - 1];
    auto& lg = grad.layers[l - 1];
    const auto rows = static_cast<Eigen::Index>(cur.support.size());

    if (const int s = cur.slot[t.destination]; s >= 0) {
      d_state.row(s) += d_dest.row(l - 1);
    }

    RowMatrix anchors = RowMatrix::Zero(rows, d);
    if (cfg.anchor == AnchorScope::AllSupported) {
      anchors.rowwise() = t.anchor.transpose();
    } else if (cur.slot[t.source] >= 0) {
      anchors.row(cur.slot[t.source]) = t.anchor.transpose();
    }

    RowMatrix d_prop, d_anchor_rows;
    RowMatrix d_gate;
    if (vector_gate) {
      d_prop = cur.gate.cwiseProduct(d_state);
      d_anchor_rows = (1.0 - cur.gate.array()).matrix().cwiseProduct(d_state);
      d_gate = (cur.propagated - anchors).cwiseProduct(d_state);
    } else {
      d_prop = cur.gate.col(0).asDiagonal() * d_state;
      d_anchor_rows = (1.0 - cur.gate.col(0).array()).matrix().asDiagonal() * d_state;
      d_gate = (cur.propagated - anchors).cwiseProduct(d_state).rowwise().sum();
    }
    if (!opts.forced_gate) {
      const RowMatrix d_gate_pre =
          d_gate.cwiseProduct(cur.gate.cwiseProduct((1.0 - cur.gate.array()).matrix()));
      lg.w_gate.leftCols(d).noalias() += d_gate_pre.transpose() * cur.propagated;
      d_prop.noalias() += d_gate_pre * lp.w_gate.leftCols(d);
      if (cfg.anchor == AnchorScope::AllSupported) {
        // Every row shares the anchor, so the sums collapse to one product.
        const Eigen::RowVectorXd col_sum = d_gate_pre.colwise().sum();
        lg.w_gate.rightCols(d).noalias() += col_sum.transpose() * t.anchor.transpose();
        d_anchor += (col_sum * lp.w_gate.rightCols(d)).transpose();
      } else {
        lg.w_gate.rightCols(d).noalias() += d_gate_pre.transpose() * anchors;
        d_anchor_rows.noalias() += d_gate_pre * lp.w_gate.rightCols(d);
      }
    }
    if (cfg.anchor == AnchorScope::AllSupported) {
      d_anchor += d_anchor_rows.colwise().sum().transpose();
    } else if (cur.slot[t.source] >= 0) {
      d_anchor += d_anchor_rows.row(cur.slot[t.source]).transpose();
    }

    const RowMatrix d_pre =
        (cur.pre.array() > 0.0).select(d_prop, RowMatrix::Zero(rows, d));
    lg.w_msg.noalias() += d_pre.transpose() * cur.message;
    const RowMatrix d_message = d_pre * lp.w_msg;

    const RowMatrix& rhat = t.attention[l - 1].scaled;
    RowMatrix d_rhat = RowMatrix::Zero(rhat.rows(), d);
    RowMatrix d_prev = RowMatrix::Zero(prev.support.size(), d);
    for (std::size_t s = 0; s < prev.support.size(); ++s) {
      for (int id : g.out_edges(prev.support[s])) {
        if (t.masked[id]) continue;
        const auto& edge = g.edges()[id];
        const int row = cur.slot[edge.tail];
        if (row < 0) continue;
        const auto dm = d_message.row(row);
        d_prev.row(s).array() += dm.array() * rhat.row(edge.relation).array();
        d_rhat.row(edge.relation).array() += dm.array() * prev.state.row(s).array();
      }
    }
    relation_attention_backward(t.attention[l - 1], lp, d_rhat, lg, d_context, outer);
    d_state = std::move(d_prev);
  }
  // Layer 0 holds the anchor at the source only.
  d_anchor += d_state.row(0).transpose();

  const Eigen::VectorXd& context = t.attention.front().context;
  const Eigen::VectorXd f_src = context.head(in);
  add_outer(grad.w_in, d_anchor, f_src, outer);
  d_src.noalias() += P.w_in.transpose() * d_anchor;
  d_src += d_context.head(in);
  d_dst += d_context.tail(in);
}

// Returns dLoss/dH_p and dLoss/dH_q (L x d each).
std::pair<RowMatrix, RowMatrix> fusion_backward(const FusionTrace& f, const Model& model,
                                                const Eigen::VectorXd& d_out, ModelParams& grad) {
  const auto L = f.h_p.rows();
  const auto d = f.h_p.cols();
  RowMatrix d_hp = RowMatrix::Zero(L, d);
  RowMatrix d_hq = RowMatrix::Zero(L, d);
  if (model.config.variant == ModelVariant::Ablated2LastLayerOnly) {
    d_hp.row(L - 1) = d_out.segment(0, d).transpose();
    d_hq.row(L - 1) = d_out.segment(d, d).transpose();
    return {d_hp, d_hq};
  }
  const RowMatrix d_hp_hat = Eigen::Map<const RowMatrix>(d_out.data(), L, d);
  const RowMatrix d_hq_hat = Eigen::Map<const RowMatrix>(d_out.data() + L * d, L, d);
  const RowMatrix& A = f.attention;
  // hp_hat = A h_q, hq_hat = A^T h_p
  RowMatrix d_A = d_hp_hat * f.h_q.transpose() + f.h_p * d_hq_hat.transpose();
  d_hq += A.transpose() * d_hp_hat;
  d_hp += A * d_hq_hat;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const RowMatrix d_scores = row_softmax_backward(A, d_A) * inv_sqrt_d;
  const RowMatrix d_proj = d_scores * f.h_q;
  d_hq += d_scores.transpose() * f.projected;
  grad.w_cross.noalias() += d_proj.transpose() * f.h_p;
  d_hp += d_proj * model.params.w_cross;
  return {d_hp, d_hq};
}

// Returns dLoss/dh_out1 contributed through the ADR block.
Eigen::VectorXd adr_space_backward(const AdrSpaceTrace& a, const Eigen::VectorXd& h_out1,
                                   const Model& model, const Eigen::VectorXd& d_out,
                                   ModelParams& grad) {
  const auto& cfg = model.config;
  const auto& P = model.params;
  Eigen::VectorXd d_s1;
  if (cfg.variant == ModelVariant::Ablated1FixedMatrix) {
    grad.w_assoc_proj.noalias() += d_out * a.assoc.transpose();
    const Eigen::VectorXd d_assoc = P.w_assoc_proj.transpose() * d_out;
    d_s1 = model.assoc_matrix.transpose() * d_assoc;
  } else {
    const int d2 = cfg.organ_dim;
    const int dh = d2 / cfg.heads;
    const RowMatrix d_refined = a.w_pool * d_out.transpose();
    const Eigen::VectorXd d_pool = a.h_refined * d_out;
    RowMatrix d_initial = RowMatrix::Zero(kNumOrgans, d2);
    d_initial.rowwise() += d_out.transpose() / static_cast<double>(kNumOrgans);

    const RowMatrix d_sum =
        d_refined.cwiseProduct((1.0 - a.h_refined.array().square()).matrix());
    d_initial += d_sum;
    // h_attn = attended W_o^T
    grad.w_o.noalias() += d_sum.transpose() * a.attended;
    const RowMatrix d_attended = d_sum * P.w_o;

    RowMatrix d_q = RowMatrix::Zero(kNumOrgans, d2);
    RowMatrix d_k = RowMatrix::Zero(kNumOrgans, d2);
    RowMatrix d_v = RowMatrix::Zero(kNumOrgans, d2);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int h = 0; h < cfg.heads; ++h) {
      const RowMatrix& att = a.head_attention[h];
      const auto d_oh = d_attended.middleCols(h * dh, dh);
      const RowMatrix d_att = d_oh * a.v.middleCols(h * dh, dh).transpose();
      d_v.middleCols(h * dh, dh) += att.transpose() * d_oh;
      const RowMatrix d_scores = row_softmax_backward(att, d_att) * scale;
      d_q.middleCols(h * dh, dh) += d_scores * a.k.middleCols(h * dh, dh);
      d_k.middleCols(h * dh, dh) += d_scores.transpose() * a.q.middleCols(h * dh, dh);
    }
    grad.w_q.noalias() += d_q.transpose() * a.h_initial;
    grad.w_k.noalias() += d_k.transpose() * a.h_initial;
    grad.w_v.noalias() += d_v.transpose() * a.h_initial;
    d_initial.noalias() += d_q * P.w_q + d_k * P.w_k + d_v * P.w_v;

    Eigen::VectorXd d_gates(kNumOrgans);
    for (int i = 0; i < kNumOrgans; ++i) {
      grad.e_plus.row(i) += a.gates[i] * d_initial.row(i);
      grad.e_minus.row(i) += (1.0 - a.gates[i]) * d_initial.row(i);
      d_gates[i] = d_initial.row(i).dot(P.e_plus.row(i) - P.e_minus.row(i));
    }
    d_s1 = d_gates.cwiseProduct(a.gates.cwiseProduct((1.0 - a.gates.array()).matrix())) +
           softmax_backward(a.w_pool, d_pool);
  }
  const Eigen::VectorXd d_s1_pre = d_s1.cwiseProduct(a.s1.cwiseProduct((1.0 - a.s1.array()).matrix()));
  grad.w_rel1.noalias() += d_s1_pre * h_out1.transpose();
  grad.b_rel1.col(0) += d_s1_pre;
  return P.w_rel1.transpose() * d_s1_pre;
}

}  // namespace

void OuterProductBuffer::add(Eigen::MatrixXd& target, const Eigen::VectorXd& left,
                             const Eigen::VectorXd& right) {
  auto it = std::find_if(pending_.begin(), pending_.end(),
                         [&](const Pending& p) { return p.target == &target; });
  if (it == pending_.end()) {
    pending_.push_back({&target, Eigen::MatrixXd(left.size(), 16),
                        Eigen::MatrixXd(right.size(), 16), 0});
    it = std::prev(pending_.end());
  }
  if (it->count == it->left.cols()) {
    it->left.conservativeResize(Eigen::NoChange, 2 * it->count);
    it->right.conservativeResize(Eigen::NoChange, 2 * it->count);
  }
  it->left.col(it->count) = left;
  it->right.col(it->count) = right;
  ++it->count;
}

void OuterProductBuffer::flush() {
  for (auto& p : pending_) {
    if (p.count == 0) continue;
    p.target->noalias() += p.left.leftCols(p.count) * p.right.leftCols(p.count).transpose();
    p.count = 0;
  }
}

void backward_pair(const Model& model, const KnowledgeGraph& g, const Eigen::VectorXd& x_p,
                   const Eigen::VectorXd& x_q, const PairForward& fwd,
                   const Eigen::VectorXd& d_logits, ModelParams& grad,
                   const ForwardOptions& opts, OuterProductBuffer* outer) {
  const auto& P = model.params;
  const auto& h = fwd.head;
  const Eigen::VectorXd& h1 = fwd.fusion.out;
  const auto n1 = h1.size();
  const auto n2 = fwd.adr.out.size();

  // Output layer and cross-level attention.
  grad.w_output.noalias() += d_logits * h.joint.transpose();
  grad.b_output.col(0) += d_logits;
  const Eigen::VectorXd d_joint = P.w_output.transpose() * d_logits;
  Eigen::VectorXd d_h1 = d_joint.segment(0, n1);
  Eigen::VectorXd d_h2 = d_joint.segment(n1, n2);
  const Eigen::VectorXd d_h3 = d_joint.segment(n1 + n2, n1);
  const Eigen::VectorXd d_weight = d_h3.cwiseProduct(h1);
  d_h1 += d_h3.cwiseProduct(h.weight);
  const Eigen::VectorXd d_score = softmax_backward(h.weight, d_weight);
  d_h1 += d_score.cwiseProduct(h.h_out2_proj);
  const Eigen::VectorXd d_proj = d_score.cwiseProduct(h1);
  grad.w_t.noalias() += d_proj * fwd.adr.out.transpose();
  d_h2.noalias() += P.w_t.transpose() * d_proj;

  d_h1 += adr_space_backward(fwd.adr, h1, model, d_h2, grad);

  auto [d_hp, d_hq] = fusion_backward(fwd.fusion, model, d_h1, grad);

  const int in = model.config.input_dim();
  Eigen::VectorXd d_fp = Eigen::VectorXd::Zero(in);
  Eigen::VectorXd d_fq = Eigen::VectorXd::Zero(in);
  flow_backward(g, model, fwd.flow_pq, d_hp, opts, grad, d_fp, d_fq, outer);
  flow_backward(g, model, fwd.flow_qp, d_hq, opts, grad, d_fq, d_fp, outer);

  const auto& seg = model.config.segments;
  attend_features_backward(x_p, seg, P.features, fwd.feat_p, d_fp, grad.features);
  attend_features_backward(x_q, seg, P.features, fwd.feat_q, d_fq, grad.features);
}

}  // namespace xadr
