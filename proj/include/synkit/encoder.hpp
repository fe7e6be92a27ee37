//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string>
#include <vector>

#include "synkit/nas.hpp"
#include "synkit/tensor.hpp"

namespace synkit::encoder {

enum class Pool { sum, mean };

struct EncoderConfig {
  int M = 3;                 // heterogeneous GNN views
  std::int64_t D = 32;       // graph embedding width
  std::int64_t D_irr = 16;
  std::int64_t D_rel = 16;   // D_irr + D_rel = D; D_k = D_rel
  int K_max = 2;
  std::int64_t D_t = 8;      // ingested target vector width
  Pool pool = Pool::sum;

  void validate() const {
    if (M < 1) throw Error("encoder needs at least one view");
    if (K_max < 1) throw Error("K_max must be >= 1");
    if (D_irr + D_rel != D) throw Error("D_irr + D_rel must equal D");
  }

  std::int64_t d_k() const { return D_rel; }
  std::int64_t embedding_width() const { return D_irr + static_cast<std::int64_t>(K_max) * d_k(); }

  nas::OpKind view_kind(int i) const { return nas::kAllOpKinds[static_cast<std::size_t>(i) % nas::kAllOpKinds.size()]; }
};

inline void init_encoder(ParamStore& store, Rng& rng, const EncoderConfig& cfg, std::int64_t ctx_width) {
  cfg.validate();
  store.create("enc.bond", random_normal(rng, {4, ctx_width}, 0.1));
  for (int i = 0; i < cfg.M; ++i)
    nas::init_message_op(store, rng, "enc.view" + std::to_string(i), cfg.view_kind(i), ctx_width, cfg.D);
  store.create("enc.fuse.w", nas::linear_init(rng, cfg.M * cfg.D, cfg.D));
  store.create("enc.fuse.b", Tensor::zeros({cfg.D}));
  store.create("enc.pool.w", nas::linear_init(rng, cfg.D, cfg.D));
  store.create("enc.pool.b", Tensor::zeros({cfg.D}));
  store.create("enc.w_irr", nas::linear_init(rng, cfg.D, cfg.D_irr));
  store.create("enc.w_rel", nas::linear_init(rng, cfg.D, cfg.D_rel));
  store.create("enc.attn.wq", nas::linear_init(rng, cfg.D_rel, cfg.D_rel));
  store.create("enc.attn.wk", nas::linear_init(rng, cfg.D_t, cfg.D_rel));
  store.create("enc.attn.wv", nas::linear_init(rng, cfg.D_t, cfg.D_rel));
  store.create("enc.attn.wo", nas::linear_init(rng, cfg.D_rel, cfg.d_k()));
  store.create("enc.attn.bo", Tensor::zeros({cfg.d_k()}));
  store.create("enc.null_slot", random_normal(rng, {cfg.d_k()}, 0.1));
}

// Eq-style multi-view encoding: per-view message passing, node-wise
// fusion (concat + linear), node pooling, then a nonlinearity + final
// linear head. x_ctx holds contextualized atom features [n, ctx_width].
inline Var encode_graph(Graph& g, ParamStore& store, const EncoderConfig& cfg, Var x_ctx,
                        const nas::GraphTopology& topo) {
  if (topo.n_atoms == 0) throw ShapeMismatch("encode_graph: empty node feature matrix");
  std::vector<Var> views;
  for (int i = 0; i < cfg.M; ++i)
    views.push_back(nas::message_op(g, store, "enc.view" + std::to_string(i), cfg.view_kind(i), x_ctx,
                                    "enc.bond", topo));
  Var fused = views.size() == 1 ? views[0] : g.concat(views, 1);
  fused = g.add(g.matmul(fused, g.param(store, "enc.fuse.w")), g.param(store, "enc.fuse.b"));
  Var pooled = g.sum_axis0(fused);
  if (cfg.pool == Pool::mean) pooled = g.scale(pooled, 1.0 / static_cast<double>(topo.n_atoms));
  return g.add(g.matmul(g.tanh_(pooled), g.param(store, "enc.pool.w")), g.param(store, "enc.pool.b"));
}

struct Disentangled {
  Var z_irr;
  Var z_rel;
};

inline Disentangled disentangle(Graph& g, ParamStore& store, const EncoderConfig& cfg, Var z_g) {
  if (g.val(z_g).numel() != cfg.D) throw ShapeMismatch("disentangle: z_G width");
  return {g.matmul(z_g, g.param(store, "enc.w_irr")), g.matmul(z_g, g.param(store, "enc.w_rel"))};
}

// Single-query cross-attention against each target vector. With one key
// the softmax weight is identically 1, so z~ = W_o(value) + z_rel; the
// pre-softmax logits are still exposed for target-ranking analyses.
inline std::vector<Var> target_attend(Graph& g, ParamStore& store, const EncoderConfig& cfg, Var z_rel,
                                      const std::vector<Tensor>& targets,
                                      std::vector<double>* logits_out = nullptr) {
  if (targets.empty()) throw NoTargets("target_attend called with K = 0");
  if (static_cast<int>(targets.size()) > cfg.K_max) throw ShapeMismatch("more targets than K_max");
  Var q = g.matmul(z_rel, g.param(store, "enc.attn.wq"));
  std::vector<Var> out;
  for (const Tensor& t : targets) {
    if (t.numel() != cfg.D_t) throw ShapeMismatch("target vector width != D_t");
    Var tv = g.constant(t);
    Var key = g.matmul(tv, g.param(store, "enc.attn.wk"));
    Var value = g.matmul(tv, g.param(store, "enc.attn.wv"));
    Var logit = g.scale(g.dot(q, key), 1.0 / std::sqrt(static_cast<double>(cfg.D_rel)));
    if (logits_out) logits_out->push_back(g.scalar_value(logit));
    Var w = g.softmax(logit);  // single key
    Var attended = g.mul(value, g.gather_rows(w, std::vector<std::int64_t>(static_cast<std::size_t>(cfg.D_rel), 0)));
    Var mapped = g.add(g.matmul(attended, g.param(store, "enc.attn.wo")), g.param(store, "enc.attn.bo"));
    out.push_back(g.add(mapped, z_rel));
  }
  return out;
}

// e_d = [z_irr || z~(1) || ... || z~(K) || null ... ], padded to K_max
// slots with the learned null-target vector so the width is fixed.
inline Var assemble_embedding(Graph& g, ParamStore& store, const EncoderConfig& cfg, Var z_irr,
                              const std::vector<Var>& z_tilde) {
  if (static_cast<int>(z_tilde.size()) > cfg.K_max) throw ShapeMismatch("more representations than K_max");
  std::vector<Var> parts{z_irr};
  for (Var z : z_tilde) parts.push_back(z);
  for (int k = static_cast<int>(z_tilde.size()); k < cfg.K_max; ++k)
    parts.push_back(g.param(store, "enc.null_slot"));
  return g.concat(parts, 0);
}

// Batch decorrelation penalty over target-adaptive representation slots:
// standardize each feature over the batch, form cross-correlation
// matrices C_{k,k'} = Z_k Z_k'^T / D_k, average ||C||_F^2 over ordered
// pairs. Zero-variance feature dimensions skip the variance scaling.
inline Var decorrelation_loss(Graph& g, const std::vector<std::vector<Var>>& batch) {
  const std::size_t b = batch.size();
  const std::size_t k_slots = b == 0 ? 0 : batch[0].size();
  if (b < 2 || k_slots < 2) return g.constant(Tensor::scalar(0.0));
  const std::int64_t d_k = g.val(batch[0][0]).numel();

  std::vector<Var> standardized;
  for (std::size_t k = 0; k < k_slots; ++k) {
    std::vector<Var> rows;
    for (std::size_t i = 0; i < b; ++i) {
      if (batch[i].size() != k_slots) throw ShapeMismatch("ragged representation batch");
      rows.push_back(g.reshape(batch[i][k], {1, d_k}));
    }
    Var z = g.concat(rows, 0);  // [B, D_k]
    Var mu = g.mean_axis0(z);
    Var centered = g.sub(z, mu);
    Var var = g.mean_axis0(g.mul(centered, centered));
    Tensor mask({d_k}), anti({d_k});
    const Tensor& vv = g.val(var);
    for (std::int64_t j = 0; j < d_k; ++j) {
      const bool keep = vv.at(j) > 1e-24;
      mask.at(j) = keep ? 1.0 : 0.0;
      anti.at(j) = keep ? 0.0 : 1.0;
    }
    Var divisor = g.sqrt_(g.add(g.mul(var, g.constant(mask)), g.constant(anti)));
    standardized.push_back(g.div(centered, divisor));
  }

  std::vector<Var> fros;
  for (std::size_t k = 0; k < k_slots; ++k) {
    for (std::size_t k2 = 0; k2 < k_slots; ++k2) {
      if (k == k2) continue;
      Var c = g.scale(g.matmul(g.transpose(standardized[k]), standardized[k2]),
                      1.0 / static_cast<double>(d_k));
      fros.push_back(g.sum(g.mul(c, c)));
    }
  }
  Var total = fros[0];
  for (std::size_t i = 1; i < fros.size(); ++i) total = g.add(total, fros[i]);
  return g.scale(total, 1.0 / static_cast<double>(k_slots * (k_slots - 1)));
}

}  // namespace synkit::encoder
