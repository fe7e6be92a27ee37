//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include "synkit/train.hpp"

namespace synkit::gradsuite {

struct GradSuiteReport {
  std::vector<std::pair<std::string, double>> losses;
  double max_error = 0.0;
  double seconds = 0.0;
};

namespace detail {

// four short samples over four small molecules; every loss in the repo
// is finite-difference checked against this fixture
struct MiniFixture {
  dataset::DataBundle bundle;
  dataset::SampleTable samples;
  lm::KnowledgeBase kb;

  MiniFixture() {
    const std::vector<std::pair<std::string, std::string>> drugs = {
        {"D001", "CCO"}, {"D002", "c1ccccc1"}, {"D003", "CC(N)C"}, {"D004", "CCN"}};
    Rng rng(913);
    bundle.expression_dim = 6;
    bundle.target_dim = 4;
    for (int c = 0; c < 2; ++c) {
      dataset::CellLineProfile p;
      p.cell_line_id = "CL0" + std::to_string(c + 1);
      for (int j = 0; j < 6; ++j) p.expression.push_back(rng.normal());
      p.description = "cell " + p.cell_line_id;
      bundle.profiles[p.cell_line_id] = std::move(p);
    }
    for (int t = 0; t < 3; ++t) {
      dataset::TargetEmbedding e;
      e.target_id = "T0" + std::to_string(t + 1);
      for (int j = 0; j < 4; ++j) e.vec.push_back(rng.normal());
      bundle.targets[e.target_id] = std::move(e);
    }
    int ti = 0;
    for (const auto& [id, smi] : drugs) {
      dataset::DrugRecord r;
      r.drug_id = id;
      r.smiles = smi;
      if (ti % 2 == 0) r.target_ids.push_back("T0" + std::to_string(ti % 3 + 1));
      ++ti;
      bundle.drugs[id] = std::move(r);
      kb.insert(id, id + " binds fast");
    }
    const double scores[4] = {15.0, -12.5, 20.0, -30.0};
    for (int i = 0; i < 4; ++i) {
      dataset::SynergySample s;
      s.drug_a_id = drugs[static_cast<std::size_t>(i)].first;
      s.drug_b_id = drugs[static_cast<std::size_t>((i + 1) % 4)].first;
      s.cell_line_id = i % 2 ? "CL02" : "CL01";
      s.scheme = static_cast<dataset::Scheme>(i % 4);
      s.score = scores[i];
      s.label = s.score >= 0 ? dataset::SynergyLabel::synergistic : dataset::SynergyLabel::antagonistic;
      samples.push_back(std::move(s));
    }
  }
};

inline model::ModelConfig micro_model_config() {
  model::ModelConfig mc;
  mc.feature_dim = chem::kMinFeatureDim;
  mc.ctx.expression_dim = 6;
  mc.ctx.d_ec = 3;
  mc.ctx.hidden = 6;
  mc.ctx.n_c = 1;
  mc.ctx.token_width = 4;
  mc.enc.M = 2;
  mc.enc.D = 6;
  mc.enc.D_irr = 3;
  mc.enc.D_rel = 3;
  mc.enc.K_max = 2;
  mc.enc.D_t = 4;
  mc.nas_layers = 2;
  mc.layer_kinds = {{nas::OpKind::GCNmol, nas::OpKind::GINmol, nas::OpKind::GATmol},
                    {nas::OpKind::SAGEmol, nas::OpKind::Graphmol, nas::OpKind::MLPmol}};
  mc.nas_hidden = 5;
  mc.d_op = 4;
  mc.pair_heads = 3;  // embedding width 3 + 2*3 = 9
  mc.x_d_width = 4;
  mc.lm.layers = 1;
  mc.lm.heads = 1;
  mc.lm.width = 4;
  mc.lm.max_context = 240;
  mc.head_hidden = 6;
  return mc;
}

}  // namespace detail

// Central-difference verification of every loss gradient at eps, each
// over exactly the parameters that loss touches.
inline GradSuiteReport run_grad_suite(double eps = 1e-4, std::uint64_t seed = 42) {
  const auto t0 = std::chrono::steady_clock::now();
  GradSuiteReport report;
  detail::MiniFixture fx;
  const auto mc = detail::micro_model_config();
  auto m = model::Model::create(mc);

  // decorrelation over free representation parameters
  {
    ParamStore store;
    Rng rng = Rng(seed).fork("gs-decorr");
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 2; ++k)
        store.create("rep." + std::to_string(i) + "." + std::to_string(k), random_normal(rng, {3}));
    const double err = grad_check([&](Graph& g, ParamStore& s) {
      std::vector<std::vector<Var>> batch(4);
      for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 2; ++k)
          batch[static_cast<std::size_t>(i)].push_back(g.param(s, "rep." + std::to_string(i) + "." + std::to_string(k)));
      return encoder::decorrelation_loss(g, batch);
    }, store, eps);
    report.losses.emplace_back("decorrelation", err);
  }

  // separation over descriptor parameters alone
  {
    ParamStore store;
    Rng rng = Rng(seed).fork("gs-sep");
    std::vector<nas::RoutingLayerSpec> specs;
    for (int l = 0; l < 2; ++l) {
      nas::RoutingLayerSpec spec;
      spec.prefix = "sep.l" + std::to_string(l);
      spec.kinds.assign(nas::kAllOpKinds.begin(), nas::kAllOpKinds.end());
      spec.in_width = 4;
      spec.out_width = 4;
      spec.d_op = 4;
      nas::init_descriptors(store, rng, spec);
      specs.push_back(std::move(spec));
    }
    const double err = grad_check([&](Graph& g, ParamStore& s) {
      return nas::separation_loss(g, s, specs);
    }, store, eps);
    report.losses.emplace_back("separation", err);
  }

  // generative losses over the LM parameters
  {
    ParamStore store;
    Rng rng = Rng(seed).fork("gs-lm");
    lm::init_lm(store, rng, mc.lm);

    std::vector<lm::BuiltPrompt> inst, task;
    for (const auto& s : fx.samples) {
      inst.push_back(lm::build_prompt(lm::Stage::instruction, s, fx.bundle.drugs,
                                      fx.bundle.profiles.at(s.cell_line_id), fx.kb));
      task.push_back(lm::build_prompt(lm::Stage::task, s, fx.bundle.drugs,
                                      fx.bundle.profiles.at(s.cell_line_id), fx.kb));
    }
    Tensor rows = random_normal(rng, {mc.ctx.n_c, mc.lm.width});
    std::vector<std::string> body_params;
    for (const auto& [name, t] : store.entries())
      if (name != "lm.head.w") body_params.push_back(name);

    // d(loss)/d(head) never touches the transformer body, so the head
    // coordinates are checked against frozen hidden states
    auto check_both = [&](const std::vector<lm::BuiltPrompt>& prompts, bool with_rows) {
      auto f = [&](Graph& g, ParamStore& s) {
        Var total;
        for (std::size_t i = 0; i < prompts.size(); ++i) {
          Var pr = with_rows ? g.constant(rows) : Var{};
          auto ap = lm::assemble_prompt(g, prompts[i].prompt, pr, pr, pr);
          Var l = lm::masked_nll(g, s, mc.lm, ap, prompts[i].target);
          total = i == 0 ? l : g.add(total, l);
        }
        return g.scale(total, 1.0 / static_cast<double>(prompts.size()));
      };
      double err = grad_check(f, store, eps, &body_params);

      std::vector<Tensor> hidden_cache;
      std::vector<std::vector<std::int64_t>> target_cache;
      for (const auto& built : prompts) {
        Graph g;
        Var pr = with_rows ? g.constant(rows) : Var{};
        auto ap = lm::assemble_prompt(g, built.prompt, pr, pr, pr);
        std::vector<std::int64_t> ids = vocab::tokenize(built.target);
        ids.push_back(vocab::kEos);
        std::vector<lm::SeqPiece> pieces = ap.pieces;
        lm::SeqPiece tail;
        tail.ids = ids;
        pieces.push_back(std::move(tail));
        Var hidden = lm::lm_hidden(g, store, mc.lm, pieces);
        std::vector<std::int64_t> positions(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i)
          positions[i] = ap.prompt_positions - 1 + static_cast<std::int64_t>(i);
        hidden_cache.push_back(g.val(g.gather_rows(hidden, positions)));
        target_cache.push_back(std::move(ids));
      }
      ParamStore head_store;
      head_store.create("lm.head.w", store.value("lm.head.w"));
      const double err_head = grad_check([&](Graph& g, ParamStore& s) {
        Var total;
        for (std::size_t i = 0; i < hidden_cache.size(); ++i) {
          Var nll = g.softmax_xent_rows(g.constant(hidden_cache[i]), g.param(s, "lm.head.w"),
                                        target_cache[i]);
          Var l = g.mean(nll);
          total = i == 0 ? l : g.add(total, l);
        }
        return g.scale(total, 1.0 / static_cast<double>(hidden_cache.size()));
      }, head_store, eps);
      return std::max(err, err_head);
    };

    report.losses.emplace_back("instruction", check_both(inst, false));
    report.losses.emplace_back("task_generative", check_both(task, true));
  }

  // direct-head task objective and the combined staged objective; the
  // message-passing ReLUs are kinked, so pick an initialization whose
  // pre-activations sit safely away from zero before differencing
  {
    auto data = train::TrainData::build(m, fx.bundle, fx.samples, &fx.kb);
    const std::vector<std::size_t> batch{0, 1, 2, 3};
    ParamStore store;
    double best_gap = -1.0;
    for (int candidate = 0; candidate < 10; ++candidate) {
      ParamStore trial;
      Rng rng = Rng(seed).fork("gs-model-" + std::to_string(candidate));
      m.init_params(trial, rng);
      for (const auto& name : trial.names_with_prefix("lm.")) trial.erase(name);
      Graph g;
      train::TrainConfig probe;
      (void)train::total_loss(g, trial, m, data, batch, lm::Stage::task, probe);
      if (g.min_kink_gap() > best_gap) {
        best_gap = g.min_kink_gap();
        store = std::move(trial);
      }
      if (best_gap > 8e-4) break;
    }

    train::TrainConfig pure;
    pure.alpha = 0.0;
    pure.beta = 0.0;
    const double err_task = grad_check([&](Graph& g, ParamStore& s) {
      return train::total_loss(g, s, m, data, batch, lm::Stage::task, pure);
    }, store, eps);
    report.losses.emplace_back("task_direct", err_task);

    train::TrainConfig full;
    full.alpha = 5e-3;
    full.beta = 5e-3;
    const double err_comb = grad_check([&](Graph& g, ParamStore& s) {
      return train::total_loss(g, s, m, data, batch, lm::Stage::task, full);
    }, store, eps);
    report.losses.emplace_back("combined", err_comb);
  }

  for (const auto& [name, err] : report.losses) report.max_error = std::max(report.max_error, err);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace synkit::gradsuite
