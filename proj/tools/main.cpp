//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "synkit/dataset.hpp"
#include "synkit/eval.hpp"
#include "synkit/fixtures.hpp"
#include "synkit/gradsuite.hpp"
#include "synkit/manifest.hpp"
#include "synkit/model.hpp"
#include "synkit/train.hpp"

namespace fs = std::filesystem;
using namespace synkit;

namespace {

struct CommonOptions {
  std::string data_dir = "fixtures";
  std::string out_dir = "out";
  std::uint64_t seed = 42;
  double tau = 10.0;
  std::string preset = "desk";
  std::string prompt_dir;
};

model::ModelConfig preset_config(const std::string& name) {
  if (name == "tiny") {
    model::ModelConfig mc;
    mc.feature_dim = 20;
    mc.ctx.d_ec = 4;
    mc.ctx.hidden = 8;
    mc.ctx.n_c = 2;
    mc.ctx.token_width = 16;
    mc.enc.M = 2;
    mc.enc.D = 8;
    mc.enc.D_irr = 4;
    mc.enc.D_rel = 4;
    mc.enc.K_max = 2;
    mc.nas_layers = 2;
    mc.nas_hidden = 8;
    mc.d_op = 8;
    mc.pair_heads = 2;
    mc.x_d_width = 8;
    mc.lm.layers = 1;
    mc.lm.heads = 2;
    mc.lm.width = 16;
    mc.lm.max_context = 384;
    mc.head_hidden = 8;
    return mc;
  }
  if (name == "desk") {
    model::ModelConfig mc;
    mc.feature_dim = 24;
    mc.ctx.d_ec = 16;
    mc.ctx.hidden = 32;
    mc.ctx.n_c = 4;
    mc.ctx.token_width = 64;
    mc.enc.M = 3;
    mc.enc.D = 32;
    mc.enc.D_irr = 16;
    mc.enc.D_rel = 16;
    mc.enc.K_max = 2;
    mc.nas_layers = 3;
    mc.nas_hidden = 32;
    mc.d_op = 16;
    mc.pair_heads = 2;
    mc.x_d_width = 32;
    mc.lm.layers = 2;
    mc.lm.heads = 2;
    mc.lm.width = 64;
    mc.lm.max_context = 512;
    mc.head_hidden = 64;
    return mc;
  }
  throw Error("unknown preset '" + name + "' (use desk or tiny)");
}

struct LoadedData {
  dataset::DataBundle bundle;
  dataset::SampleTable filtered;
  fixtures::FixturePaths paths;
  lm::KnowledgeBase kb;
  bool has_kb = false;
};

LoadedData load_data(const CommonOptions& opts) {
  LoadedData d;
  d.paths = fixtures::fixture_paths(opts.data_dir);
  d.bundle = dataset::ingest(d.paths.triplets, d.paths.expression, d.paths.drugs, d.paths.targets);
  d.filtered = dataset::filter_and_label(d.bundle.samples, opts.tau);
  if (fs::exists(d.paths.knowledge)) {
    d.kb = lm::KnowledgeBase::load(d.paths.knowledge);
    d.has_kb = true;
  }
  return d;
}

model::Model build_model(const CommonOptions& opts, const dataset::DataBundle& bundle) {
  auto mc = preset_config(opts.preset);
  mc.ctx.expression_dim = static_cast<std::int64_t>(bundle.expression_dim);
  mc.enc.D_t = static_cast<std::int64_t>(bundle.target_dim);
  return model::Model::create(mc);
}

dataset::SplitCriterion parse_criterion(const std::string& name) {
  if (name == "scaffold") return dataset::SplitCriterion::scaffold;
  if (name == "size") return dataset::SplitCriterion::size;
  throw Error("criterion must be scaffold or size");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << text;
}

manifest::RunManifest start_manifest(const std::string& subcommand, const CommonOptions& opts,
                                     const LoadedData* data) {
  manifest::RunManifest m;
  m.subcommand = subcommand;
  m.seed = opts.seed;
  if (data) {
    m.add_input(data->paths.triplets);
    m.add_input(data->paths.expression);
    m.add_input(data->paths.drugs);
    m.add_input(data->paths.targets);
    if (data->has_kb) m.add_input(data->paths.knowledge);
  }
  return m;
}

lm::PromptTemplates templates_for(const CommonOptions& opts) {
  if (opts.prompt_dir.empty()) return lm::PromptTemplates::defaults();
  return lm::PromptTemplates::from_dir(opts.prompt_dir);
}

const std::vector<std::size_t>& split_indices(const dataset::SplitPartition& part, const std::string& name) {
  if (name == "train") return part.train;
  if (name == "valid") return part.valid;
  if (name == "test") return part.test;
  throw Error("split must be train, valid or test");
}

struct EvalRow {
  evalkit::Prediction pred;
  evalkit::TargetValue target;
};

std::vector<EvalRow> evaluate_split(const model::Model& m, ParamStore& store, const LoadedData& data,
                                    const std::vector<std::size_t>& indices, const std::string& path_kind,
                                    const lm::PromptTemplates& templates, int task_question) {
  auto tdata = train::TrainData::build(m, data.bundle, data.filtered, data.has_kb ? &data.kb : nullptr);
  static const lm::KnowledgeBase kEmptyKb;
  std::vector<EvalRow> rows;
  for (std::size_t idx : indices) {
    const auto& sample = data.filtered[idx];
    const auto& cell = data.bundle.profiles.at(sample.cell_line_id);
    Graph g;
    auto pf = m.forward_pair(g, store, tdata.prepared.at(sample.drug_a_id),
                             tdata.prepared.at(sample.drug_b_id), Tensor::from_vector(cell.expression));
    EvalRow row;
    row.target.label = sample.label == dataset::SynergyLabel::synergistic ? 1 : 0;
    row.target.score = sample.score;
    if (path_kind == "direct") {
      auto out = m.direct_output(g, store, pf);
      Var probs = g.softmax(out.logits);
      row.pred.prob_synergistic = g.val(probs).at(1);
      row.pred.score = g.val(out.score).at(0);
    } else if (path_kind == "lm") {
      auto built = lm::build_prompt(lm::Stage::task, sample, data.bundle.drugs, cell,
                                    data.has_kb ? data.kb : kEmptyKb, templates, task_question);
      const Tensor ec = g.val(pf.E_c), e1 = g.val(pf.E_d1), e2 = g.val(pf.E_d2);
      const std::string text = lm::greedy_decode(store, m.cfg.lm, built.prompt, &ec, &e1, &e2, 96);
      auto parsed = lm::parse_response(text);
      if (parsed.ok) {
        row.pred.prob_synergistic = parsed.value.label == dataset::SynergyLabel::synergistic ? 1.0 : 0.0;
        row.pred.score = parsed.value.score;
      } else {
        row.pred.prob_synergistic = 0.5;
        row.pred.parse_failed = true;
      }
    } else {
      throw Error("path must be direct or lm");
    }
    rows.push_back(row);
  }
  return rows;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"drug synergy pipeline: parsing, splits, search, training, evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonOptions opts;
  app.add_option("--seed", opts.seed, "root random seed");
  app.add_option("--out-dir", opts.out_dir, "output directory");
  app.add_option("--data-dir", opts.data_dir, "directory holding the data files");
  app.add_option("--tau", opts.tau, "synergy filter threshold");
  app.add_option("--preset", opts.preset, "model size preset (desk or tiny)");
  app.add_option("--prompt-dir", opts.prompt_dir, "directory with prompt template files");

  auto* gen = app.add_subcommand("gen-fixtures", "write a deterministic synthetic corpus");
  fixtures::FixtureConfig fixture_cfg;
  gen->add_option("--drugs", fixture_cfg.n_drugs, "number of drugs");
  gen->add_option("--cells", fixture_cfg.n_cells, "number of cell lines");
  gen->add_option("--triplets", fixture_cfg.n_triplets, "number of triplets");
  gen->add_option("--genes", fixture_cfg.expression_dim, "expression vector length");
  gen->add_option("--target-dim", fixture_cfg.target_dim, "target vector length");

  auto* ingest_cmd = app.add_subcommand("ingest", "validate the data files and cache tables");

  auto* split_cmd = app.add_subcommand("split", "partition drugs and assemble train/valid/test");
  std::string criterion_name = "size";
  double theta = 305.0;
  std::string ratio = "1:1";
  split_cmd->add_option("--criterion", criterion_name, "scaffold or size");
  split_cmd->add_option("--theta", theta, "splitting threshold");
  split_cmd->add_option("--ratio", ratio, "valid:test ratio");

  auto* train_cmd = app.add_subcommand("train", "run the staged optimization");
  std::string config_path, stage_name = "both";
  std::string train_criterion = "size";
  double train_theta = 305.0;
  train_cmd->add_option("--config", config_path, "key = value training config file");
  train_cmd->add_option("--stage", stage_name, "both, instruction or task");
  train_cmd->add_option("--criterion", train_criterion, "scaffold or size");
  train_cmd->add_option("--theta", train_theta, "splitting threshold");

  auto* eval_cmd = app.add_subcommand("eval", "metric report for a checkpoint on a split");
  std::string ckpt_path, split_name = "test", path_kind = "direct";
  std::string eval_criterion = "size";
  double eval_theta = 305.0;
  int question_index = 0;
  eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--split", split_name, "train, valid or test");
  eval_cmd->add_option("--path", path_kind, "direct or lm");
  eval_cmd->add_option("--criterion", eval_criterion, "scaffold or size");
  eval_cmd->add_option("--theta", eval_theta, "splitting threshold");
  eval_cmd->add_option("--question", question_index, "task question index (0..2)");

  auto* analyze_cmd = app.add_subcommand("analyze", "routing-weight structural correlations");
  std::string an_ckpt, an_split = "test";
  std::string an_criterion = "size";
  double an_theta = 305.0;
  analyze_cmd->add_option("--checkpoint", an_ckpt, "checkpoint file")->required();
  analyze_cmd->add_option("--split", an_split, "train, valid or test");
  analyze_cmd->add_option("--criterion", an_criterion, "scaffold or size");
  analyze_cmd->add_option("--theta", an_theta, "splitting threshold");

  auto* explain_cmd = app.add_subcommand("explain", "character-level SMILES attention for one sample");
  std::string ex_ckpt;
  std::size_t sample_index = 0;
  int which_drug = 1;
  std::size_t window = 8;
  explain_cmd->add_option("--checkpoint", ex_ckpt, "checkpoint file")->required();
  explain_cmd->add_option("--sample-index", sample_index, "index into the filtered sample table");
  explain_cmd->add_option("--drug", which_drug, "1 or 2");
  explain_cmd->add_option("--window", window, "fragment window width");

  auto* grad_cmd = app.add_subcommand("grad-check", "finite-difference verification of every loss");
  double eps = 1e-4;
  grad_cmd->add_option("--eps", eps, "central difference step");

  CLI11_PARSE(app, argc, argv);
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(opts.out_dir);
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  if (gen->parsed()) {
    fixture_cfg.seed = opts.seed;
    auto paths = fixtures::gen_fixtures(opts.out_dir, fixture_cfg);
    manifest::RunManifest m = start_manifest("gen-fixtures", opts, nullptr);
    m.outputs = {paths.triplets, paths.expression, paths.drugs, paths.targets, paths.knowledge};
    m.wall_seconds = elapsed();
    m.write(opts.out_dir + "/manifest.json");
    std::cout << "wrote fixtures to " << opts.out_dir << "\n";
    return 0;
  }

  if (ingest_cmd->parsed()) {
    auto data = load_data(opts);
    std::ostringstream os;
    os << "samples," << data.bundle.samples.size() << "\n";
    os << "filtered," << data.filtered.size() << "\n";
    os << "drugs," << data.bundle.drugs.size() << "\n";
    os << "cells," << data.bundle.profiles.size() << "\n";
    os << "targets," << data.bundle.targets.size() << "\n";
    os << "expression_dim," << data.bundle.expression_dim << "\n";
    os << "target_dim," << data.bundle.target_dim << "\n";
    write_text(opts.out_dir + "/ingest_summary.csv", os.str());
    {
      std::ostringstream cache;
      cache << "drug_a_id,drug_b_id,cell_line_id,scheme,score,label\n";
      for (const auto& s : data.filtered)
        cache << s.drug_a_id << ',' << s.drug_b_id << ',' << s.cell_line_id << ','
              << dataset::scheme_name(s.scheme) << ',' << format_double(s.score) << ','
              << (s.label == dataset::SynergyLabel::synergistic ? "synergistic" : "antagonistic") << "\n";
      write_text(opts.out_dir + "/cache_samples.csv", cache.str());
    }
    for (const auto& w : data.bundle.warnings) std::cerr << "warning: " << w << "\n";
    manifest::RunManifest m = start_manifest("ingest", opts, &data);
    m.outputs = {opts.out_dir + "/ingest_summary.csv", opts.out_dir + "/cache_samples.csv"};
    m.wall_seconds = elapsed();
    m.write(opts.out_dir + "/manifest.json");
    std::cout << os.str();
    return 0;
  }

  if (split_cmd->parsed()) {
    auto data = load_data(opts);
    auto parts = split(ratio, ':');
    if (parts.size() != 2) throw Error("ratio must look like 1:1");
    bool ok1 = false, ok2 = false;
    const int vr = static_cast<int>(parse_double(parts[0], ok1));
    const int tr = static_cast<int>(parse_double(parts[1], ok2));
    if (!ok1 || !ok2) throw Error("ratio must look like 1:1");
    auto part = dataset::assemble_splits(
        data.filtered, dataset::ood_split(data.bundle.drugs, parse_criterion(criterion_name), theta), vr, tr,
        opts.seed);
    const std::string report = dataset::split_report(part);
    write_text(opts.out_dir + "/split_report.csv", report);
    {
      std::ostringstream os;
      os << "sample_index,split\n";
      for (auto i : part.train) os << i << ",train\n";
      for (auto i : part.valid) os << i << ",valid\n";
      for (auto i : part.test) os << i << ",test\n";
      write_text(opts.out_dir + "/split_assignments.csv", os.str());
    }
    manifest::RunManifest m = start_manifest("split", opts, &data);
    m.outputs = {opts.out_dir + "/split_report.csv", opts.out_dir + "/split_assignments.csv"};
    m.wall_seconds = elapsed();
    m.write(opts.out_dir + "/manifest.json");
    std::cout << report;
    return 0;
  }

  if (train_cmd->parsed()) {
    auto data = load_data(opts);
    auto m = build_model(opts, data.bundle);
    train::TrainConfig cfg;
    if (!config_path.empty()) cfg = train::config_from_file(config_path);
    cfg.seed = opts.seed;
    auto part = dataset::assemble_splits(
        data.filtered, dataset::ood_split(data.bundle.drugs, parse_criterion(train_criterion), train_theta),
        1, 1, opts.seed);
    ParamStore store;
    Rng rng = Rng(opts.seed).fork("init");
    m.init_params(store, rng);
    auto tdata = train::TrainData::build(m, data.bundle, data.filtered, data.has_kb ? &data.kb : nullptr);
    tdata.templates = templates_for(opts);
    train::AdamW optimizer(cfg);
    std::vector<std::string> warnings;
    manifest::RunManifest mf = start_manifest("train", opts, &data);
    mf.config_text = train::config_to_text(cfg);

    if (stage_name == "both" || stage_name == "instruction") {
      if (!data.has_kb) throw MissingKnowledge("instruction stage requires knowledge.jsonl");
      auto r = train::run_stage(lm::Stage::instruction, m, store, optimizer, tdata, part.train, cfg,
                                opts.out_dir, &warnings);
      std::cout << "instruction stage: " << r.steps_run << " steps, loss " << format_double(r.first_loss)
                << " -> " << format_double(r.last_loss) << "\n";
      mf.outputs.push_back(r.checkpoint_path);
      mf.outputs.push_back(r.loss_log_path);
    }
    if (stage_name == "both" || stage_name == "task") {
      auto r = train::run_stage(lm::Stage::task, m, store, optimizer, tdata, part.train, cfg, opts.out_dir,
                                &warnings);
      std::cout << "task stage: " << r.steps_run << " steps, loss " << format_double(r.first_loss) << " -> "
                << format_double(r.last_loss) << "\n";
      mf.outputs.push_back(r.checkpoint_path);
      mf.outputs.push_back(r.loss_log_path);
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    mf.wall_seconds = elapsed();
    mf.write(opts.out_dir + "/manifest.json");
    return 0;
  }

  if (eval_cmd->parsed()) {
    auto data = load_data(opts);
    auto m = build_model(opts, data.bundle);
    ParamStore store;
    store.load(ckpt_path);
    auto part = dataset::assemble_splits(
        data.filtered, dataset::ood_split(data.bundle.drugs, parse_criterion(eval_criterion), eval_theta), 1,
        1, opts.seed);
    auto rows = evaluate_split(m, store, data, split_indices(part, split_name), path_kind,
                               templates_for(opts), question_index);
    std::vector<evalkit::Prediction> preds;
    std::vector<evalkit::TargetValue> targets;
    for (const auto& r : rows) {
      preds.push_back(r.pred);
      targets.push_back(r.target);
    }
    auto report = evalkit::compute_metrics(preds, targets);
    write_text(opts.out_dir + "/metrics.csv", report.to_csv());
    std::ostringstream os;
    os << "split " << split_name << " (" << path_kind << " path), n = " << report.n << "\n";
    os << "  ACC  " << format_double(report.acc) << "\n";
    os << "  AUC  " << (report.auc ? format_double(*report.auc) : "undefined") << "\n";
    os << "  MAE  " << format_double(report.mae) << "\n";
    os << "  RMSE " << format_double(report.rmse) << "\n";
    if (report.parse_failure_count)
      os << "  parse failures " << report.parse_failure_count << " (worst-case regression error)\n";
    write_text(opts.out_dir + "/metrics.txt", os.str());
    std::cout << os.str();
    manifest::RunManifest mf = start_manifest("eval", opts, &data);
    mf.add_input(ckpt_path);
    mf.outputs = {opts.out_dir + "/metrics.csv", opts.out_dir + "/metrics.txt"};
    mf.wall_seconds = elapsed();
    mf.write(opts.out_dir + "/manifest.json");
    return 0;
  }

  if (analyze_cmd->parsed()) {
    auto data = load_data(opts);
    auto m = build_model(opts, data.bundle);
    ParamStore store;
    store.load(an_ckpt);
    auto part = dataset::assemble_splits(
        data.filtered, dataset::ood_split(data.bundle.drugs, parse_criterion(an_criterion), an_theta), 1, 1,
        opts.seed);
    auto tdata = train::TrainData::build(m, data.bundle, data.filtered, nullptr);

    std::vector<evalkit::RoutingRecord> records;
    std::ostringstream target_rows;
    target_rows << "sample_index,drug_id,top_target_id\n";
    for (std::size_t idx : split_indices(part, an_split)) {
      const auto& sample = data.filtered[idx];
      const auto& cell = data.bundle.profiles.at(sample.cell_line_id);
      Graph g;
      auto pf = m.forward_pair(g, store, tdata.prepared.at(sample.drug_a_id),
                               tdata.prepared.at(sample.drug_b_id), Tensor::from_vector(cell.expression));
      for (std::size_t l = 0; l < m.layers.size(); ++l) {
        for (std::size_t k = 0; k < m.layers[l].kinds.size(); ++k) {
          records.push_back({sample.drug_a_id, static_cast<int>(l), nas::op_kind_name(m.layers[l].kinds[k]),
                             g.val(pf.alpha1[l]).at(static_cast<std::int64_t>(k))});
          records.push_back({sample.drug_b_id, static_cast<int>(l), nas::op_kind_name(m.layers[l].kinds[k]),
                             g.val(pf.alpha2[l]).at(static_cast<std::int64_t>(k))});
        }
      }
      for (int side = 0; side < 2; ++side) {
        const auto& fwd = side == 0 ? pf.d1 : pf.d2;
        const auto& record = data.bundle.drugs.at(side == 0 ? sample.drug_a_id : sample.drug_b_id);
        if (!fwd.attn_logits.empty()) {
          std::size_t best = 0;
          for (std::size_t k = 1; k < fwd.attn_logits.size(); ++k)
            if (fwd.attn_logits[k] > fwd.attn_logits[best]) best = k;
          target_rows << idx << ',' << record.drug_id << ',' << record.target_ids[best] << "\n";
        }
      }
    }
    write_text(opts.out_dir + "/routing.csv", evalkit::routing_records_to_csv(records));
    write_text(opts.out_dir + "/top_targets.csv", target_rows.str());

    std::map<std::string, chem::StructuralDescriptors> table;
    for (const auto& [id, record] : data.bundle.drugs)
      table[id] = chem::structural_descriptors(chem::parse_smiles(record.smiles));
    auto analysis = evalkit::routing_structure_analysis(records, table);
    write_text(opts.out_dir + "/structure_analysis.csv", analysis.to_csv());
    std::cout << analysis.to_csv();
    manifest::RunManifest mf = start_manifest("analyze", opts, &data);
    mf.add_input(an_ckpt);
    mf.outputs = {opts.out_dir + "/routing.csv", opts.out_dir + "/structure_analysis.csv",
                  opts.out_dir + "/top_targets.csv"};
    mf.wall_seconds = elapsed();
    mf.write(opts.out_dir + "/manifest.json");
    return 0;
  }

  if (explain_cmd->parsed()) {
    auto data = load_data(opts);
    auto m = build_model(opts, data.bundle);
    ParamStore store;
    store.load(ex_ckpt);
    if (sample_index >= data.filtered.size()) throw Error("sample index out of range");
    const auto& sample = data.filtered[sample_index];
    const auto& cell = data.bundle.profiles.at(sample.cell_line_id);
    auto tdata = train::TrainData::build(m, data.bundle, data.filtered, nullptr);
    Graph g;
    auto pf = m.forward_pair(g, store, tdata.prepared.at(sample.drug_a_id),
                             tdata.prepared.at(sample.drug_b_id), Tensor::from_vector(cell.expression));
    static const lm::KnowledgeBase kEmptyKb;
    auto built = lm::build_prompt(lm::Stage::task, sample, data.bundle.drugs, cell, kEmptyKb,
                                  templates_for(opts), 0);
    const Tensor ec = g.val(pf.E_c), e1 = g.val(pf.E_d1), e2 = g.val(pf.E_d2);
    const auto& drug_id = which_drug == 1 ? sample.drug_a_id : sample.drug_b_id;
    const auto& smiles = data.bundle.drugs.at(drug_id).smiles;
    auto att = evalkit::smiles_attention(store, m.cfg.lm, built.prompt, smiles, which_drug, &ec, &e1, &e2,
                                         window);
    write_text(opts.out_dir + "/attention.csv", att.to_csv());
    std::cout << "drug " << drug_id << " (" << smiles << ")\n";
    std::cout << "top fragment: " << smiles.substr(att.window_start, att.window_len) << " (fraction "
              << format_double(att.window_fraction) << ")\n";
    manifest::RunManifest mf = start_manifest("explain", opts, &data);
    mf.add_input(ex_ckpt);
    mf.outputs = {opts.out_dir + "/attention.csv"};
    mf.wall_seconds = elapsed();
    mf.write(opts.out_dir + "/manifest.json");
    return 0;
  }

  if (grad_cmd->parsed()) {
    auto report = gradsuite::run_grad_suite(eps, opts.seed);
    for (const auto& [name, err] : report.losses)
      std::cout << name << " max relative error " << format_double(err) << "\n";
    std::cout << "overall max relative error " << format_double(report.max_error) << " ("
              << format_double(report.seconds) << " s)\n";
    return report.max_error < 1e-3 ? 0 : 1;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
