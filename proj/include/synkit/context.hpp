//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string>
#include <vector>

#include "synkit/nas.hpp"
#include "synkit/tensor.hpp"
#include "synkit/vocab.hpp"

namespace synkit::context {

struct ContextConfig {
  std::int64_t expression_dim = 16;  // G
  std::int64_t d_ec = 16;            // structural context width
  std::int64_t hidden = 32;          // projector hidden width
  std::int64_t n_c = 4;              // prefix embedding rows
  std::int64_t token_width = 64;     // must match the LM width
};

// generic two-layer projector; the drug-side projector reuses this
// shape with its own parameters
inline void init_projector(ParamStore& store, Rng& rng, const std::string& prefix, std::int64_t in_w,
                           std::int64_t hidden, std::int64_t out_w) {
  store.create(prefix + ".w1", nas::linear_init(rng, in_w, hidden));
  store.create(prefix + ".b1", Tensor::zeros({hidden}));
  store.create(prefix + ".w2", nas::linear_init(rng, hidden, out_w));
  store.create(prefix + ".b2", Tensor::zeros({out_w}));
}

inline Var apply_projector(Graph& g, ParamStore& store, const std::string& prefix, Var x) {
  Var hidden = g.tanh_(g.add(g.matmul(x, g.param(store, prefix + ".w1")), g.param(store, prefix + ".b1")));
  return g.add(g.matmul(hidden, g.param(store, prefix + ".w2")), g.param(store, prefix + ".b2"));
}

inline void init_context(ParamStore& store, Rng& rng, const ContextConfig& cfg) {
  init_projector(store, rng, "ctx.proj", cfg.expression_dim, cfg.hidden, cfg.d_ec);
  init_projector(store, rng, "ctx.embed", cfg.expression_dim, cfg.hidden, cfg.n_c * cfg.token_width);
}

// e_c = phi_ctx(x_c)
inline Var project_context(Graph& g, ParamStore& store, const ContextConfig& cfg, Var x_c) {
  if (g.val(x_c).numel() != cfg.expression_dim) throw ShapeMismatch("expression vector width != G");
  return apply_projector(g, store, "ctx.proj", x_c);
}

// z~_v = [z_v || e_c] for every atom; the z_v block is copied bit-exactly
inline Var contextualize_graph(Graph& g, Var z_v, Var e_c) {
  const std::int64_t n = g.val(z_v).rows();
  Var ec_rows = g.gather_rows(g.reshape(e_c, {1, g.val(e_c).numel()}),
                              std::vector<std::int64_t>(static_cast<std::size_t>(n), 0));
  return g.concat({z_v, ec_rows}, 1);
}

// discrete cell tokens under the shared byte vocabulary
inline std::vector<std::int64_t> cell_tokens(std::string_view description) {
  if (description.empty()) return {vocab::kPadDesc};
  return vocab::tokenize(description);
}

// E_c: n_c rows of LM-width embeddings projected from the expression vector
inline Var project_cell_embedding(Graph& g, ParamStore& store, const ContextConfig& cfg, Var x_c) {
  if (g.val(x_c).numel() != cfg.expression_dim) throw ShapeMismatch("expression vector width != G");
  Var flat = apply_projector(g, store, "ctx.embed", x_c);
  return g.reshape(flat, {cfg.n_c, cfg.token_width});
}

}  // namespace synkit::context
