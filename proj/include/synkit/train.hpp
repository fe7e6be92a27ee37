//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "synkit/dataset.hpp"
#include "synkit/lm.hpp"
#include "synkit/model.hpp"
#include "synkit/tensor.hpp"

namespace synkit::train {

struct TrainConfig {
  double alpha = 5e-3;  // decorrelation weight
  double beta = 5e-3;   // separation weight
  int instruction_steps = 200;
  int task_steps = 500;
  int batch_size = 8;
  std::uint64_t seed = 42;
  double lr_warmup_start = 1e-6;
  double lr_peak = 1e-4;
  double lr_final = 1e-5;
  int warmup_steps = 100;
  int total_steps = 1000;
  double weight_decay = 0.05;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 1.0;  // generative path only
  double task_class_weight = 1.0;
  double task_score_weight = 1.0;
  bool use_direct_head = true;
  int task_question = 0;

  void validate() const {
    if (alpha < 0 || beta < 0) throw Error("loss weights must be nonnegative");
    if (lr_warmup_start > lr_peak) throw Error("warmup must not start above the peak rate");
    if (lr_final > lr_peak) throw Error("final rate must not exceed the peak");
    if (warmup_steps > total_steps) throw Error("warmup longer than the schedule");
    if (batch_size < 1) throw Error("batch size must be positive");
  }
};

// linear warmup to the peak, cosine decay to the final rate
inline double lr_at(int step, const TrainConfig& cfg) {
  if (step < 0 || step > cfg.total_steps) throw Error("step outside the schedule");
  if (step < cfg.warmup_steps)
    return cfg.lr_warmup_start +
           (cfg.lr_peak - cfg.lr_warmup_start) * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  if (step == cfg.warmup_steps) return cfg.lr_peak;
  const double t = static_cast<double>(step - cfg.warmup_steps) /
                   static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  return cfg.lr_final + (cfg.lr_peak - cfg.lr_final) * 0.5 * (1.0 + std::cos(3.14159265358979323846 * t));
}

// decoupled weight decay Adam with bias correction
class AdamW {
 public:
  explicit AdamW(const TrainConfig& cfg) : cfg_(cfg) {}

  void step(ParamStore& store, double lr) {
    store.step += 1;
    const double t = static_cast<double>(store.step);
    const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, t);
    for (const auto& [name, value] : store.entries()) {
      Tensor& p = store.value(name);
      const Tensor& grad = store.grad(name);
      Tensor& m = slot(m_, name, p.shape);
      Tensor& v = slot(v_, name, p.shape);
      for (std::size_t i = 0; i < p.v.size(); ++i) {
        const double gi = grad.v[i];
        if (!std::isfinite(gi)) throw NonFiniteValue("gradient for " + name);
        m.v[i] = cfg_.adam_beta1 * m.v[i] + (1.0 - cfg_.adam_beta1) * gi;
        v.v[i] = cfg_.adam_beta2 * v.v[i] + (1.0 - cfg_.adam_beta2) * gi * gi;
        const double mhat = m.v[i] / bc1;
        const double vhat = v.v[i] / bc2;
        p.v[i] -= lr * cfg_.weight_decay * p.v[i];
        p.v[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
        if (!std::isfinite(p.v[i])) throw NonFiniteValue("parameter " + name + " left the finite range");
      }
    }
  }

  // fresh-moment convenience used by the standalone smoke tests
  void reset() {
    m_.clear();
    v_.clear();
  }

 private:
  Tensor& slot(std::map<std::string, Tensor>& side, const std::string& name,
               const std::vector<std::int64_t>& shape) {
    auto it = side.find(name);
    if (it == side.end()) it = side.emplace(name, Tensor(shape)).first;
    return it->second;
  }

  TrainConfig cfg_;
  std::map<std::string, Tensor> m_, v_;
};

inline double grad_global_norm(ParamStore& store) {
  double sq = 0.0;
  for (const auto& [name, t] : store.entries()) {
    const Tensor& g = store.grad(name);
    for (double x : g.v) sq += x * x;
  }
  return std::sqrt(sq);
}

inline void clip_grads(ParamStore& store, double max_norm) {
  const double norm = grad_global_norm(store);
  if (norm <= max_norm || norm == 0.0) return;
  const double s = max_norm / norm;
  for (const auto& [name, t] : store.entries()) {
    Tensor& g = store.grad(name);
    for (double& x : g.v) x *= s;
  }
}

// ---------------------------------------------------------------------------
// staged objective
// ---------------------------------------------------------------------------

struct TrainData {
  const dataset::SampleTable* samples = nullptr;
  std::map<std::string, model::PreparedDrug> prepared;
  const std::map<std::string, dataset::CellLineProfile>* profiles = nullptr;
  const std::map<std::string, dataset::DrugRecord>* drugs = nullptr;
  const lm::KnowledgeBase* kb = nullptr;
  lm::PromptTemplates templates = lm::PromptTemplates::defaults();

  static TrainData build(const model::Model& m, const dataset::DataBundle& bundle,
                         const dataset::SampleTable& samples, const lm::KnowledgeBase* kb) {
    TrainData d;
    d.samples = &samples;
    d.profiles = &bundle.profiles;
    d.drugs = &bundle.drugs;
    d.kb = kb;
    for (const auto& [id, record] : bundle.drugs) d.prepared.emplace(id, m.prepare_drug(record, bundle.targets));
    return d;
  }
};

struct LossComponents {
  double total = 0.0;
  double inst = 0.0;
  double task = 0.0;
  double decorr = 0.0;
  double sep = 0.0;
};

// L = delta L_inst + (1 - delta) L_task + alpha L_decorr + beta L_sep.
// In the task stage the direct head swaps the generative likelihood for
// cross-entropy + squared error; the generative path stays selectable.
inline Var total_loss(Graph& g, ParamStore& store, const model::Model& m, const TrainData& data,
                      const std::vector<std::size_t>& batch, lm::Stage stage, const TrainConfig& cfg,
                      LossComponents* out = nullptr, std::vector<std::string>* warnings = nullptr) {
  if (batch.empty()) throw Error("empty batch");
  std::vector<Var> stage_terms;
  std::vector<std::vector<Var>> rep_batch;

  for (std::size_t idx : batch) {
    const auto& sample = (*data.samples)[idx];
    const auto& cell = data.profiles->at(sample.cell_line_id);
    const auto& d1 = data.prepared.at(sample.drug_a_id);
    const auto& d2 = data.prepared.at(sample.drug_b_id);
    const Tensor x_c = Tensor::from_vector(cell.expression);

    auto pf = m.forward_pair(g, store, d1, d2, x_c);
    rep_batch.push_back(pf.d1.rep_slots);
    rep_batch.push_back(pf.d2.rep_slots);

    if (stage == lm::Stage::instruction) {
      if (!data.kb) throw MissingKnowledge("instruction stage requires a knowledge base");
      lm::BuiltPrompt built;
      try {
        built = lm::build_prompt(lm::Stage::instruction, sample, *data.drugs, cell, *data.kb,
                                 data.templates, 0, warnings);
      } catch (const MissingKnowledge&) {
        if (warnings)
          warnings->push_back("skipped sample without any drug knowledge: " + sample.drug_a_id + "+" +
                              sample.drug_b_id);
        continue;
      }
      auto assembled = lm::assemble_prompt(g, built.prompt, Var{}, Var{}, Var{});
      stage_terms.push_back(lm::instruction_loss(g, store, m.cfg.lm, assembled, built.target));
    } else if (cfg.use_direct_head) {
      auto head = m.direct_output(g, store, pf);
      const std::int64_t label = sample.label == dataset::SynergyLabel::synergistic ? 1 : 0;
      Var ce = g.scale(g.take_per_row(g.log_softmax(g.reshape(head.logits, {1, 2})), {label}), -1.0);
      Var diff = g.add_scalar(head.score, -sample.score);
      Var mse = g.mul(diff, diff);
      stage_terms.push_back(g.add(g.scale(g.sum(ce), cfg.task_class_weight),
                                  g.scale(g.sum(mse), cfg.task_score_weight)));
    } else {
      static const lm::KnowledgeBase kEmptyKb;
      lm::BuiltPrompt built = lm::build_prompt(lm::Stage::task, sample, *data.drugs, cell,
                                               data.kb ? *data.kb : kEmptyKb, data.templates,
                                               cfg.task_question, warnings);
      auto assembled = lm::assemble_prompt(g, built.prompt, pf.E_c, pf.E_d1, pf.E_d2);
      stage_terms.push_back(lm::task_loss(g, store, m.cfg.lm, assembled, built.target));
    }
  }

  Var stage_loss;
  if (stage_terms.empty()) {
    stage_loss = g.constant(Tensor::scalar(0.0));
  } else {
    stage_loss = stage_terms[0];
    for (std::size_t i = 1; i < stage_terms.size(); ++i) stage_loss = g.add(stage_loss, stage_terms[i]);
    stage_loss = g.scale(stage_loss, 1.0 / static_cast<double>(stage_terms.size()));
  }

  Var decorr = encoder::decorrelation_loss(g, rep_batch);
  Var sep = nas::separation_loss(g, store, m.layers);
  Var total = g.add(stage_loss, g.add(g.scale(decorr, cfg.alpha), g.scale(sep, cfg.beta)));
  if (out) {
    out->total = g.scalar_value(total);
    out->decorr = g.scalar_value(decorr);
    out->sep = g.scalar_value(sep);
    out->inst = stage == lm::Stage::instruction ? g.scalar_value(stage_loss) : 0.0;
    out->task = stage == lm::Stage::task ? g.scalar_value(stage_loss) : 0.0;
  }
  return total;
}

struct StageResult {
  std::string checkpoint_path;
  std::string loss_log_path;
  double first_loss = 0.0;
  double last_loss = 0.0;
  int steps_run = 0;
};

// One optimization stage over the given sample indices. Deterministic
// under (config, seed): batches come from a seeded shuffle, reductions
// are sequential, and the loss log carries full-precision values.
inline StageResult run_stage(lm::Stage stage, const model::Model& m, ParamStore& store, AdamW& opt,
                             const TrainData& data, std::vector<std::size_t> indices, const TrainConfig& cfg,
                             const std::string& out_dir, std::vector<std::string>* warnings = nullptr) {
  cfg.validate();
  if (indices.empty()) throw Error("run_stage: no samples");
  std::filesystem::create_directories(out_dir);
  const std::string stage_name = stage == lm::Stage::instruction ? "instruction" : "task";
  StageResult result;
  result.checkpoint_path = out_dir + "/" + stage_name + ".ckpt";
  result.loss_log_path = out_dir + "/" + stage_name + "_loss_log.csv";

  std::ofstream log(result.loss_log_path);
  log << "step,lr,total,inst,task,decorr,sep\n";

  Rng shuffle_rng = Rng(cfg.seed).fork("batch-" + stage_name);
  const int steps = stage == lm::Stage::instruction ? cfg.instruction_steps : cfg.task_steps;
  std::size_t cursor = indices.size();  // trigger a shuffle on the first step

  for (int step = 0; step < steps; ++step) {
    std::vector<std::size_t> batch;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= indices.size()) {
        for (std::size_t i = indices.size(); i > 1; --i) {
          const std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
          std::swap(indices[i - 1], indices[j]);
        }
        cursor = 0;
      }
      batch.push_back(indices[cursor++]);
    }

    store.zero_grads();
    Graph g;
    LossComponents comps;
    Var loss = total_loss(g, store, m, data, batch, stage, cfg, &comps, warnings);
    g.backward(loss);
    const bool generative = stage == lm::Stage::instruction || !cfg.use_direct_head;
    if (generative && cfg.clip_norm > 0.0) clip_grads(store, cfg.clip_norm);
    const double lr = lr_at(std::min(static_cast<int>(store.step), cfg.total_steps), cfg);
    opt.step(store, lr);

    log << store.step << ',' << format_double(lr) << ',' << format_double(comps.total) << ','
        << format_double(comps.inst) << ',' << format_double(comps.task) << ','
        << format_double(comps.decorr) << ',' << format_double(comps.sep) << '\n';
    if (step == 0) result.first_loss = comps.total;
    result.last_loss = comps.total;
    ++result.steps_run;
  }

  log.close();
  store.save(result.checkpoint_path);
  return result;
}

// ---------------------------------------------------------------------------
// flat key = value config files mirroring TrainConfig field names
// ---------------------------------------------------------------------------

inline std::string config_to_text(const TrainConfig& c) {
  std::ostringstream os;
  os << "alpha = " << format_double(c.alpha) << "\n";
  os << "beta = " << format_double(c.beta) << "\n";
  os << "instruction_steps = " << c.instruction_steps << "\n";
  os << "task_steps = " << c.task_steps << "\n";
  os << "batch_size = " << c.batch_size << "\n";
  os << "seed = " << c.seed << "\n";
  os << "lr_warmup_start = " << format_double(c.lr_warmup_start) << "\n";
  os << "lr_peak = " << format_double(c.lr_peak) << "\n";
  os << "lr_final = " << format_double(c.lr_final) << "\n";
  os << "warmup_steps = " << c.warmup_steps << "\n";
  os << "total_steps = " << c.total_steps << "\n";
  os << "weight_decay = " << format_double(c.weight_decay) << "\n";
  os << "adam_beta1 = " << format_double(c.adam_beta1) << "\n";
  os << "adam_beta2 = " << format_double(c.adam_beta2) << "\n";
  os << "adam_eps = " << format_double(c.adam_eps) << "\n";
  os << "clip_norm = " << format_double(c.clip_norm) << "\n";
  os << "task_class_weight = " << format_double(c.task_class_weight) << "\n";
  os << "task_score_weight = " << format_double(c.task_score_weight) << "\n";
  os << "use_direct_head = " << (c.use_direct_head ? "true" : "false") << "\n";
  os << "task_question = " << c.task_question << "\n";
  return os.str();
}

inline TrainConfig config_from_text(const std::string& text) {
  TrainConfig c;
  for (const auto& raw : split(text, '\n')) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw SchemaError("config line missing '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool ok = true;
    auto num = [&]() {
      bool good = false;
      double v = parse_double(value, good);
      ok = good;
      return v;
    };
    if (key == "alpha") c.alpha = num();
    else if (key == "beta") c.beta = num();
    else if (key == "instruction_steps") c.instruction_steps = static_cast<int>(num());
    else if (key == "task_steps") c.task_steps = static_cast<int>(num());
    else if (key == "batch_size") c.batch_size = static_cast<int>(num());
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(num());
    else if (key == "lr_warmup_start") c.lr_warmup_start = num();
    else if (key == "lr_peak") c.lr_peak = num();
    else if (key == "lr_final") c.lr_final = num();
    else if (key == "warmup_steps") c.warmup_steps = static_cast<int>(num());
    else if (key == "total_steps") c.total_steps = static_cast<int>(num());
    else if (key == "weight_decay") c.weight_decay = num();
    else if (key == "adam_beta1") c.adam_beta1 = num();
    else if (key == "adam_beta2") c.adam_beta2 = num();
    else if (key == "adam_eps") c.adam_eps = num();
    else if (key == "clip_norm") c.clip_norm = num();
    else if (key == "task_class_weight") c.task_class_weight = num();
    else if (key == "task_score_weight") c.task_score_weight = num();
    else if (key == "use_direct_head") c.use_direct_head = value == "true" || value == "1";
    else if (key == "task_question") c.task_question = static_cast<int>(num());
    else throw SchemaError("unknown config key: " + key);
    if (!ok) throw SchemaError("bad numeric value for " + key + ": " + value);
  }
  c.validate();
  return c;
}

inline TrainConfig config_from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_text(ss.str());
}

}  // namespace synkit::train
