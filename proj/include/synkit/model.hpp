//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <map>
#include <string>
#include <vector>

#include "synkit/chem.hpp"
#include "synkit/context.hpp"
#include "synkit/dataset.hpp"
#include "synkit/encoder.hpp"
#include "synkit/lm.hpp"
#include "synkit/nas.hpp"

namespace synkit::model {

struct ModelConfig {
  int feature_dim = 24;  // atom feature width
  context::ContextConfig ctx;
  encoder::EncoderConfig enc;
  int nas_layers = 3;
  std::vector<std::vector<nas::OpKind>> layer_kinds;  // empty: all six per layer
  std::int64_t nas_hidden = 32;
  std::int64_t d_op = 16;
  int pair_heads = 2;
  std::int64_t x_d_width = 32;
  lm::LmConfig lm;
  std::int64_t head_hidden = 64;
  bool head_symmetrize = true;
  int task_question = 0;

  std::int64_t ctx_feat_width() const { return feature_dim + ctx.d_ec; }

  void validate() const {
    enc.validate();
    if (feature_dim < chem::kMinFeatureDim) throw FeatureDimTooSmall("model feature_dim too small");
    if (ctx.token_width != lm.width) throw Error("ctx.token_width must match the LM width");
    if (nas_layers < 1) throw Error("need at least one searchable layer");
    if (enc.embedding_width() % pair_heads != 0)
      throw Error("embedding width must divide evenly into pair attention heads");
  }
};

// per-drug immutable precomputation shared across training steps
struct PreparedDrug {
  std::string drug_id;
  chem::MolecularGraph graph;
  nas::GraphTopology topo;
  Tensor features;               // [n_atoms, feature_dim]
  std::vector<Tensor> targets;   // at most K_max ingested target vectors
};

class Model {
 public:
  ModelConfig cfg;
  std::vector<nas::RoutingLayerSpec> layers;

  static Model create(ModelConfig config) {
    config.validate();
    Model m;
    m.cfg = config;
    for (int l = 0; l < config.nas_layers; ++l) {
      nas::RoutingLayerSpec spec;
      spec.prefix = "nas.l" + std::to_string(l);
      if (!config.layer_kinds.empty()) {
        spec.kinds = config.layer_kinds[static_cast<std::size_t>(l) % config.layer_kinds.size()];
      } else {
        spec.kinds.assign(nas::kAllOpKinds.begin(), nas::kAllOpKinds.end());
      }
      spec.in_width = l == 0 ? config.ctx_feat_width() : config.nas_hidden;
      spec.out_width = config.nas_hidden;
      spec.d_op = config.d_op;
      m.layers.push_back(std::move(spec));
    }
    return m;
  }

  void init_params(ParamStore& store, Rng& rng) const {
    context::init_context(store, rng, cfg.ctx);
    encoder::init_encoder(store, rng, cfg.enc, cfg.ctx_feat_width());
    for (const auto& spec : layers) nas::init_routing_layer(store, rng, spec);
    nas::init_pair_attention(store, rng, "pair", cfg.enc.embedding_width(), 2 * cfg.enc.embedding_width());
    store.create("nas.hproj.w", nas::linear_init(rng, cfg.enc.embedding_width(), cfg.d_op));
    store.create("nas.hproj.b", Tensor::zeros({cfg.d_op}));
    nas::init_readout(store, rng, "nas.read", cfg.nas_hidden, cfg.x_d_width);
    context::init_projector(store, rng, "drug.embed", cfg.x_d_width, cfg.ctx.hidden,
                            cfg.ctx.n_c * cfg.ctx.token_width);
    lm::init_lm(store, rng, cfg.lm);
    lm::DirectHeadConfig head;
    head.in_width = 3 * cfg.ctx.n_c * cfg.ctx.token_width + 2 * cfg.x_d_width;
    head.hidden = cfg.head_hidden;
    lm::init_direct_head(store, rng, head);
  }

  PreparedDrug prepare_drug(const dataset::DrugRecord& record,
                            const std::map<std::string, dataset::TargetEmbedding>& targets) const {
    PreparedDrug p;
    p.drug_id = record.drug_id;
    p.graph = chem::parse_smiles(record.smiles);
    p.topo = nas::topology_of(p.graph);
    p.features = chem::atom_features(p.graph, cfg.feature_dim);
    for (const auto& tid : record.target_ids) {
      if (static_cast<int>(p.targets.size()) >= cfg.enc.K_max) break;
      p.targets.push_back(Tensor::from_vector(targets.at(tid).vec));
    }
    return p;
  }

  struct DrugForward {
    Var ctx_features;             // contextualized atom features z~_v
    Var e_d;                      // assembled drug embedding
    std::vector<Var> rep_slots;   // exactly K_max slots (real + null padding)
    std::vector<double> attn_logits;
  };

  DrugForward embed_drug(Graph& g, ParamStore& store, const PreparedDrug& drug, Var e_c) const {
    DrugForward out;
    out.ctx_features = context::contextualize_graph(g, g.constant(drug.features), e_c);
    Var z_g = encoder::encode_graph(g, store, cfg.enc, out.ctx_features, drug.topo);
    auto parts = encoder::disentangle(g, store, cfg.enc, z_g);
    std::vector<Var> reps;
    if (!drug.targets.empty())
      reps = encoder::target_attend(g, store, cfg.enc, parts.z_rel, drug.targets, &out.attn_logits);
    out.e_d = encoder::assemble_embedding(g, store, cfg.enc, parts.z_irr, reps);
    out.rep_slots = reps;
    for (int k = static_cast<int>(reps.size()); k < cfg.enc.K_max; ++k)
      out.rep_slots.push_back(g.param(store, "enc.null_slot"));
    return out;
  }

  struct PairForward {
    DrugForward d1, d2;
    Var e_c;
    Var h_d1, h_d2;
    std::vector<Var> alpha1, alpha2;  // routing weights per layer
    Var x_d1, x_d2;                   // routed molecular representations
    Var E_c, E_d1, E_d2;              // LM-width prefix rows
  };

  PairForward forward_pair(Graph& g, ParamStore& store, const PreparedDrug& d1, const PreparedDrug& d2,
                           const Tensor& x_c) const {
    PairForward out;
    Var xc = g.constant(x_c);
    out.e_c = context::project_context(g, store, cfg.ctx, xc);
    out.d1 = embed_drug(g, store, d1, out.e_c);
    out.d2 = embed_drug(g, store, d2, out.e_c);
    auto [h1, h2] = nas::pair_attend(g, store, "pair", out.d1.e_d, out.d2.e_d, cfg.pair_heads);
    out.h_d1 = h1;
    out.h_d2 = h2;

    Var x1 = out.d1.ctx_features;
    Var x2 = out.d2.ctx_features;
    for (const auto& spec : layers) {
      Var a1 = nas::routing_weights(g, store, spec, h1, "nas.hproj");
      Var a2 = nas::routing_weights(g, store, spec, h2, "nas.hproj");
      out.alpha1.push_back(a1);
      out.alpha2.push_back(a2);
      x1 = nas::mixed_layer(g, store, spec, x1, a1, d1.topo);
      x2 = nas::mixed_layer(g, store, spec, x2, a2, d2.topo);
    }
    out.x_d1 = nas::readout(g, store, "nas.read", x1);
    out.x_d2 = nas::readout(g, store, "nas.read", x2);

    out.E_c = context::project_cell_embedding(g, store, cfg.ctx, xc);
    out.E_d1 = g.reshape(context::apply_projector(g, store, "drug.embed", out.x_d1),
                         {cfg.ctx.n_c, cfg.ctx.token_width});
    out.E_d2 = g.reshape(context::apply_projector(g, store, "drug.embed", out.x_d2),
                         {cfg.ctx.n_c, cfg.ctx.token_width});
    return out;
  }

  lm::DirectOutput direct_output(Graph& g, ParamStore& store, const PairForward& pf) const {
    lm::DirectHeadConfig head;
    head.in_width = 3 * cfg.ctx.n_c * cfg.ctx.token_width + 2 * cfg.x_d_width;
    head.hidden = cfg.head_hidden;
    head.symmetrize = cfg.head_symmetrize;
    return lm::direct_head(g, store, head, pf.E_c, pf.E_d1, pf.E_d2, pf.x_d1, pf.x_d2);
  }
};

}  // namespace synkit::model
