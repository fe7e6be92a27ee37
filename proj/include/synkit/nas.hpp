//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <string>
#include <vector>

#include "synkit/chem.hpp"
#include "synkit/tensor.hpp"

namespace synkit::nas {

enum class OpKind { GCNmol, GINmol, GATmol, SAGEmol, Graphmol, MLPmol };

inline constexpr std::array<OpKind, 6> kAllOpKinds = {OpKind::GCNmol, OpKind::GINmol, OpKind::GATmol,
                                                      OpKind::SAGEmol, OpKind::Graphmol, OpKind::MLPmol};

inline const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::GCNmol: return "GCNmol";
    case OpKind::GINmol: return "GINmol";
    case OpKind::GATmol: return "GATmol";
    case OpKind::SAGEmol: return "SAGEmol";
    case OpKind::Graphmol: return "Graphmol";
    case OpKind::MLPmol: return "MLPmol";
  }
  return "?";
}

// Directed edge view of a molecular graph: each bond appears once per
// direction so message passing runs src -> dst.
struct GraphTopology {
  std::int64_t n_atoms = 0;
  std::vector<std::int64_t> edge_src;
  std::vector<std::int64_t> edge_dst;
  std::vector<std::int64_t> edge_bond_kind;  // 0 single, 1 double, 2 triple, 3 aromatic
  std::vector<double> inv_sqrt_deg1;         // 1/sqrt(deg+1), self-loop convention
};

inline GraphTopology topology_of(const chem::MolecularGraph& g) {
  GraphTopology t;
  t.n_atoms = static_cast<std::int64_t>(g.atoms.size());
  std::vector<int> deg(g.atoms.size(), 0);
  for (const auto& b : g.bonds) {
    const std::int64_t kind = static_cast<std::int64_t>(b.order) - 1;
    t.edge_src.push_back(b.a);
    t.edge_dst.push_back(b.b);
    t.edge_bond_kind.push_back(kind);
    t.edge_src.push_back(b.b);
    t.edge_dst.push_back(b.a);
    t.edge_bond_kind.push_back(kind);
    ++deg[b.a];
    ++deg[b.b];
  }
  for (std::size_t i = 0; i < g.atoms.size(); ++i)
    t.inv_sqrt_deg1.push_back(1.0 / std::sqrt(static_cast<double>(deg[i]) + 1.0));
  return t;
}

inline Tensor linear_init(Rng& rng, std::int64_t in_w, std::int64_t out_w) {
  const double s = std::sqrt(6.0 / static_cast<double>(in_w + out_w));
  return random_uniform(rng, {in_w, out_w}, -s, s);
}

inline void init_message_op(ParamStore& store, Rng& rng, const std::string& prefix, OpKind kind,
                            std::int64_t in_w, std::int64_t out_w) {
  switch (kind) {
    case OpKind::GCNmol:
      store.create(prefix + ".gcn.w", linear_init(rng, in_w, out_w));
      store.create(prefix + ".gcn.b", Tensor::zeros({out_w}));
      break;
    case OpKind::GINmol:
      store.create(prefix + ".gin.eps", Tensor::zeros({1}));
      store.create(prefix + ".gin.w1", linear_init(rng, in_w, out_w));
      store.create(prefix + ".gin.b1", Tensor::zeros({out_w}));
      store.create(prefix + ".gin.w2", linear_init(rng, out_w, out_w));
      store.create(prefix + ".gin.b2", Tensor::zeros({out_w}));
      break;
    case OpKind::GATmol:
      store.create(prefix + ".gat.a_src", random_normal(rng, {in_w}, 0.1));
      store.create(prefix + ".gat.a_dst", random_normal(rng, {in_w}, 0.1));
      store.create(prefix + ".gat.w", linear_init(rng, in_w, out_w));
      store.create(prefix + ".gat.b", Tensor::zeros({out_w}));
      break;
    case OpKind::SAGEmol:
      store.create(prefix + ".sage.w_root", linear_init(rng, in_w, out_w));
      store.create(prefix + ".sage.w_nbr", linear_init(rng, in_w, out_w));
      store.create(prefix + ".sage.b", Tensor::zeros({out_w}));
      break;
    case OpKind::Graphmol:
      store.create(prefix + ".graph.w_self", linear_init(rng, in_w, out_w));
      store.create(prefix + ".graph.w_nbr", linear_init(rng, in_w, out_w));
      store.create(prefix + ".graph.b", Tensor::zeros({out_w}));
      break;
    case OpKind::MLPmol:
      store.create(prefix + ".mlp.w", linear_init(rng, in_w, out_w));
      store.create(prefix + ".mlp.b", Tensor::zeros({out_w}));
      break;
  }
}

namespace detail {

// per-edge bond embeddings, width-matched to the node features
inline Var bond_rows(Graph& g, ParamStore& store, const std::string& bond_table, const GraphTopology& topo) {
  Var table = g.param(store, bond_table);
  return g.gather_rows(table, topo.edge_bond_kind);
}

inline Var neighbor_messages(Graph& g, Var x, Var bonds, const GraphTopology& topo) {
  Var xj = g.gather_rows(x, topo.edge_src);
  return g.add(xj, bonds);
}

}  // namespace detail

// One candidate operator. x is [n_atoms, in_w]; the bond table named
// `bond_table` must be [4, in_w]. Returns [n_atoms, out_w].
inline Var message_op(Graph& g, ParamStore& store, const std::string& prefix, OpKind kind, Var x,
                      const std::string& bond_table, const GraphTopology& topo) {
  const std::int64_t n = topo.n_atoms;
  switch (kind) {
    case OpKind::GCNmol: {
      // h_i = W * sum_{j in N(i) ∪ {i}} m_j / sqrt((d_i+1)(d_j+1)), m_j = x_j + e_ij, m_i = x_i
      Var bonds = detail::bond_rows(g, store, bond_table, topo);
      Var msgs = detail::neighbor_messages(g, x, bonds, topo);
      std::vector<double> edge_norm(topo.edge_src.size());
      for (std::size_t e = 0; e < topo.edge_src.size(); ++e)
        edge_norm[e] = topo.inv_sqrt_deg1[topo.edge_src[e]] * topo.inv_sqrt_deg1[topo.edge_dst[e]];
      Var weighted = g.mul_colvec(msgs, g.constant(Tensor::from_vector(edge_norm)));
      Var agg = g.scatter_add_rows(weighted, topo.edge_dst, n);
      std::vector<double> self_norm(topo.inv_sqrt_deg1.size());
      for (std::size_t i = 0; i < self_norm.size(); ++i)
        self_norm[i] = topo.inv_sqrt_deg1[i] * topo.inv_sqrt_deg1[i];
      Var self = g.mul_colvec(x, g.constant(Tensor::from_vector(self_norm)));
      Var combined = g.add(agg, self);
      return g.add(g.matmul(combined, g.param(store, prefix + ".gcn.w")), g.param(store, prefix + ".gcn.b"));
    }
    case OpKind::GINmol: {
      // h_i = MLP((1+eps) x_i + sum_j ReLU(x_j + e_ij))
      Var bonds = detail::bond_rows(g, store, bond_table, topo);
      Var msgs = g.relu(detail::neighbor_messages(g, x, bonds, topo));
      Var agg = g.scatter_add_rows(msgs, topo.edge_dst, n);
      Var eps = g.param(store, prefix + ".gin.eps");
      Var scale_vec = g.gather_rows(g.add_scalar(eps, 1.0), std::vector<std::int64_t>(n, 0));
      Var self = g.mul_colvec(x, scale_vec);
      Var z = g.add(self, agg);
      Var hidden = g.relu(g.add(g.matmul(z, g.param(store, prefix + ".gin.w1")), g.param(store, prefix + ".gin.b1")));
      return g.add(g.matmul(hidden, g.param(store, prefix + ".gin.w2")), g.param(store, prefix + ".gin.b2"));
    }
    case OpKind::GATmol: {
      // h_i = W * sum_j alpha_ij ReLU(x_j + e_ij), alpha softmax over N(i)
      Var bonds = detail::bond_rows(g, store, bond_table, topo);
      Var values = g.relu(detail::neighbor_messages(g, x, bonds, topo));
      if (topo.edge_src.empty()) {
        Var zero = g.constant(Tensor::zeros({n, g.val(x).cols()}));
        return g.add(g.matmul(zero, g.param(store, prefix + ".gat.w")), g.param(store, prefix + ".gat.b"));
      }
      Var centers = g.gather_rows(x, topo.edge_dst);
      Var s1 = g.matmul(centers, g.param(store, prefix + ".gat.a_src"));
      Var s2 = g.matmul(values, g.param(store, prefix + ".gat.a_dst"));
      Var scores = g.leaky_relu(g.add(s1, s2), 0.2);
      // shift by the per-neighborhood max (detached); softmax is shift-invariant
      std::vector<double> seg_max(static_cast<std::size_t>(n), -1e300);
      const Tensor& sv = g.val(scores);
      for (std::size_t e = 0; e < topo.edge_dst.size(); ++e)
        seg_max[topo.edge_dst[e]] = std::max(seg_max[topo.edge_dst[e]], sv.at(static_cast<std::int64_t>(e)));
      std::vector<double> shift(topo.edge_dst.size());
      for (std::size_t e = 0; e < topo.edge_dst.size(); ++e) shift[e] = seg_max[topo.edge_dst[e]];
      Var ex = g.exp_(g.sub(scores, g.constant(Tensor::from_vector(shift))));
      Var denom = g.scatter_add_rows(ex, topo.edge_dst, n);
      Var denom_per_edge = g.gather_rows(denom, topo.edge_dst);
      Var alpha = g.div(ex, denom_per_edge);
      Var weighted = g.mul_colvec(values, alpha);
      Var agg = g.scatter_add_rows(weighted, topo.edge_dst, n);
      return g.add(g.matmul(agg, g.param(store, prefix + ".gat.w")), g.param(store, prefix + ".gat.b"));
    }
    case OpKind::SAGEmol: {
      // h_i = W_root x_i + W_nbr mean_j (x_j + e_ij)
      Var bonds = detail::bond_rows(g, store, bond_table, topo);
      Var msgs = detail::neighbor_messages(g, x, bonds, topo);
      Var sums = g.scatter_add_rows(msgs, topo.edge_dst, n);
      std::vector<double> inv_deg(static_cast<std::size_t>(n), 0.0);
      for (std::size_t e = 0; e < topo.edge_dst.size(); ++e) inv_deg[topo.edge_dst[e]] += 1.0;
      for (auto& d : inv_deg) d = d > 0.0 ? 1.0 / d : 0.0;
      Var mean_nbr = g.mul_colvec(sums, g.constant(Tensor::from_vector(inv_deg)));
      Var root = g.matmul(x, g.param(store, prefix + ".sage.w_root"));
      Var nbr = g.matmul(mean_nbr, g.param(store, prefix + ".sage.w_nbr"));
      return g.add(g.add(root, nbr), g.param(store, prefix + ".sage.b"));
    }
    case OpKind::Graphmol: {
      // h_i = W_self x_i + W_nbr sum_j (x_j + e_ij)
      Var bonds = detail::bond_rows(g, store, bond_table, topo);
      Var msgs = detail::neighbor_messages(g, x, bonds, topo);
      Var sums = g.scatter_add_rows(msgs, topo.edge_dst, n);
      Var self = g.matmul(x, g.param(store, prefix + ".graph.w_self"));
      Var nbr = g.matmul(sums, g.param(store, prefix + ".graph.w_nbr"));
      return g.add(g.add(self, nbr), g.param(store, prefix + ".graph.b"));
    }
    case OpKind::MLPmol:
      // pointwise transformation, the skip-like candidate
      return g.add(g.matmul(x, g.param(store, prefix + ".mlp.w")), g.param(store, prefix + ".mlp.b"));
  }
  throw Error("unknown operator kind");
}

// One searchable layer: m operator slots, each with a latent descriptor.
struct RoutingLayerSpec {
  std::string prefix;            // parameter namespace, e.g. "nas.l0"
  std::vector<OpKind> kinds;     // m >= 2
  std::int64_t in_width = 0;
  std::int64_t out_width = 0;
  std::int64_t d_op = 16;

  std::string op_prefix(std::size_t slot) const { return prefix + ".op" + std::to_string(slot); }
  std::string descriptor_name(std::size_t slot) const { return prefix + ".o" + std::to_string(slot); }
  std::string bond_table() const { return prefix + ".bond"; }
};

// unit-norm random descriptors, one soft orthogonalization sweep so the
// separation loss starts small but nonzero
inline void init_descriptors(ParamStore& store, Rng& rng, const RoutingLayerSpec& spec) {
  std::vector<Tensor> descs;
  for (std::size_t i = 0; i < spec.kinds.size(); ++i) {
    Tensor d = random_normal(rng, {spec.d_op}, 1.0);
    for (const Tensor& prev : descs) {
      double dot = 0.0;
      for (std::int64_t j = 0; j < spec.d_op; ++j) dot += d.at(j) * prev.at(j);
      for (std::int64_t j = 0; j < spec.d_op; ++j) d.at(j) -= 0.95 * dot * prev.at(j);
    }
    double norm = 0.0;
    for (std::int64_t j = 0; j < spec.d_op; ++j) norm += d.at(j) * d.at(j);
    norm = std::sqrt(norm);
    for (std::int64_t j = 0; j < spec.d_op; ++j) d.at(j) /= norm;
    descs.push_back(d);
  }
  for (std::size_t i = 0; i < descs.size(); ++i) store.create(spec.descriptor_name(i), descs[i]);
}

inline void init_routing_layer(ParamStore& store, Rng& rng, const RoutingLayerSpec& spec) {
  if (spec.kinds.size() < 2) throw Error("routing layer needs at least 2 operators");
  store.create(spec.bond_table(), random_normal(rng, {4, spec.in_width}, 0.1));
  for (std::size_t i = 0; i < spec.kinds.size(); ++i)
    init_message_op(store, rng, spec.op_prefix(i), spec.kinds[i], spec.in_width, spec.out_width);
  init_descriptors(store, rng, spec);
}

// alpha_i = softmax_i(<proj(h_d), o_i>); h_d is projected into the
// descriptor space by a shared learned map named `hproj`.
inline Var routing_weights(Graph& g, ParamStore& store, const RoutingLayerSpec& spec, Var h_d,
                           const std::string& hproj_prefix) {
  Var p = g.matmul(h_d, g.param(store, hproj_prefix + ".w"));
  p = g.add(p, g.param(store, hproj_prefix + ".b"));
  std::vector<Var> logits;
  for (std::size_t i = 0; i < spec.kinds.size(); ++i) {
    Var o = g.param(store, spec.descriptor_name(i));
    double norm = 0.0;
    for (double xv : g.val(o).v) norm += xv * xv;
    if (std::sqrt(norm) <= 1e-12)
      throw DegenerateDescriptor("descriptor " + spec.descriptor_name(i) + " has near-zero norm");
    logits.push_back(g.dot(p, o));
  }
  return g.softmax(g.concat(logits, 0));
}

// x^{l+1} = sum_i alpha_i op_i(x^l)
inline Var mixed_layer(Graph& g, ParamStore& store, const RoutingLayerSpec& spec, Var x, Var alpha,
                       const GraphTopology& topo) {
  const Tensor& av = g.val(alpha);
  if (av.numel() != static_cast<std::int64_t>(spec.kinds.size()))
    throw ShapeMismatch("alpha length does not match operator count");
  const std::int64_t n = topo.n_atoms;
  std::vector<Var> flat;
  for (std::size_t i = 0; i < spec.kinds.size(); ++i) {
    Var out = message_op(g, store, spec.op_prefix(i), spec.kinds[i], x, spec.bond_table(), topo);
    flat.push_back(g.reshape(out, {1, n * spec.out_width}));
  }
  Var stacked = g.concat(flat, 0);                  // [m, n*out]
  Var mixedv = g.matmul(alpha, stacked);            // [n*out]
  return g.reshape(mixedv, {n, spec.out_width});
}

// mean over layers of mean over ordered pairs of squared cosine similarity
inline Var separation_loss(Graph& g, ParamStore& store, const std::vector<RoutingLayerSpec>& layers) {
  std::vector<Var> per_layer;
  for (const auto& spec : layers) {
    const std::size_t m = spec.kinds.size();
    std::vector<Var> units;
    for (std::size_t i = 0; i < m; ++i) {
      Var o = g.param(store, spec.descriptor_name(i));
      Var norm = g.sqrt_(g.dot(o, o));
      if (g.scalar_value(norm) <= 1e-12)
        throw DegenerateDescriptor("descriptor " + spec.descriptor_name(i) + " has near-zero norm");
      Var inv = g.gather_rows(g.div(g.constant(Tensor::scalar(1.0)), norm),
                              std::vector<std::int64_t>(static_cast<std::size_t>(spec.d_op), 0));
      units.push_back(g.mul(o, inv));
    }
    std::vector<Var> sq;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        Var c = g.dot(units[i], units[j]);
        sq.push_back(g.mul(c, c));
      }
    Var total = sq[0];
    for (std::size_t k = 1; k < sq.size(); ++k) total = g.add(total, sq[k]);
    per_layer.push_back(g.scale(total, 1.0 / static_cast<double>(m * (m - 1))));
  }
  Var s = per_layer[0];
  for (std::size_t l = 1; l < per_layer.size(); ++l) s = g.add(s, per_layer[l]);
  return g.scale(s, 1.0 / static_cast<double>(per_layer.size()));
}

inline void init_pair_attention(ParamStore& store, Rng& rng, const std::string& prefix, std::int64_t width,
                                std::int64_t ffn_hidden) {
  store.create(prefix + ".wq", linear_init(rng, width, width));
  store.create(prefix + ".wk", linear_init(rng, width, width));
  store.create(prefix + ".wv", linear_init(rng, width, width));
  store.create(prefix + ".wo", linear_init(rng, width, width));
  store.create(prefix + ".ffn.w1", linear_init(rng, width, ffn_hidden));
  store.create(prefix + ".ffn.b1", Tensor::zeros({ffn_hidden}));
  store.create(prefix + ".ffn.w2", linear_init(rng, ffn_hidden, width));
  store.create(prefix + ".ffn.b2", Tensor::zeros({width}));
}

namespace detail {

// h = e_self + FFN(MultiHead(Q from e_self, K/V from e_other))
inline Var attend_one(Graph& g, ParamStore& store, const std::string& prefix, Var e_self, Var e_other,
                      int heads) {
  const std::int64_t width = g.val(e_self).numel();
  if (width % heads != 0) throw ShapeMismatch("embedding width not divisible by head count");
  const std::int64_t dh = width / heads;
  Var q = g.matmul(e_self, g.param(store, prefix + ".wq"));
  Var k = g.matmul(e_other, g.param(store, prefix + ".wk"));
  Var v = g.matmul(e_other, g.param(store, prefix + ".wv"));
  Var q2 = g.reshape(q, {heads, dh});
  Var k2 = g.reshape(k, {heads, dh});
  Var v2 = g.reshape(v, {heads, dh});
  // one key per head: the softmax over a single logit is identically 1
  Var logits = g.scale(g.sum_axis1(g.mul(q2, k2)), 1.0 / std::sqrt(static_cast<double>(dh)));
  Var weights = g.softmax(g.reshape(logits, {heads, 1}));
  Var attended = g.mul_colvec(v2, g.reshape(weights, {heads}));
  Var merged = g.matmul(g.reshape(attended, {width}), g.param(store, prefix + ".wo"));
  Var hidden = g.tanh_(g.add(g.matmul(merged, g.param(store, prefix + ".ffn.w1")),
                             g.param(store, prefix + ".ffn.b1")));
  Var ffn = g.add(g.matmul(hidden, g.param(store, prefix + ".ffn.w2")), g.param(store, prefix + ".ffn.b2"));
  return g.add(e_self, ffn);
}

}  // namespace detail

// bidirectional pair context injection with shared weights
inline std::pair<Var, Var> pair_attend(Graph& g, ParamStore& store, const std::string& prefix, Var e_d1,
                                       Var e_d2, int heads) {
  if (g.val(e_d1).numel() != g.val(e_d2).numel()) throw ShapeMismatch("pair embeddings differ in width");
  Var h1 = detail::attend_one(g, store, prefix, e_d1, e_d2, heads);
  Var h2 = detail::attend_one(g, store, prefix, e_d2, e_d1, heads);
  return {h1, h2};
}

inline void init_readout(ParamStore& store, Rng& rng, const std::string& prefix, std::int64_t in_w,
                         std::int64_t out_w) {
  store.create(prefix + ".w", linear_init(rng, in_w, out_w));
  store.create(prefix + ".b", Tensor::zeros({out_w}));
}

// final molecular representation: linear head over the node sum
inline Var readout(Graph& g, ParamStore& store, const std::string& prefix, Var x_nodes) {
  Var pooled = g.sum_axis0(x_nodes);
  return g.add(g.matmul(pooled, g.param(store, prefix + ".w")), g.param(store, prefix + ".b"));
}

}  // namespace synkit::nas
