//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "synkit/context.hpp"
#include "synkit/dataset.hpp"
#include "synkit/tensor.hpp"
#include "synkit/vocab.hpp"

namespace synkit::lm {

// ---------------------------------------------------------------------------
// knowledge retrieval (exact-id lookup over a local description database)
// ---------------------------------------------------------------------------

class KnowledgeBase {
 public:
  static KnowledgeBase load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open knowledge file: " + path);
    KnowledgeBase kb;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("drug_id") || !j.contains("description"))
        throw SchemaError("knowledge line " + std::to_string(lineno) + " is not {drug_id, description}");
      const std::string id = j["drug_id"].get<std::string>();
      if (kb.entries_.count(id))
        throw DuplicateKey("drug_id '" + id + "' repeated at knowledge line " + std::to_string(lineno));
      kb.entries_[id] = j["description"].get<std::string>();
    }
    return kb;
  }

  void insert(const std::string& id, const std::string& description) {
    if (entries_.count(id)) throw DuplicateKey("drug_id '" + id + "' already present");
    entries_[id] = description;
  }

  // a missing id is a Miss value, not an error
  std::optional<std::string> retrieve(const std::string& drug_id) const {
    auto it = entries_.find(drug_id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::string> entries_;
};

// ---------------------------------------------------------------------------
// structured chain-of-thought responses
// ---------------------------------------------------------------------------

struct StructuredResponse {
  dataset::SynergyLabel label = dataset::SynergyLabel::antagonistic;
  double score_low = 0.0;
  double score_high = 0.0;
  double score = 0.0;
};

inline std::string serialize_response(const StructuredResponse& r) {
  std::ostringstream os;
  os << "label: " << (r.label == dataset::SynergyLabel::synergistic ? "synergistic" : "antagonistic")
     << "; range: [" << format_double(r.score_low) << ", " << format_double(r.score_high)
     << "]; score: " << format_double(r.score);
  return os.str();
}

struct ResponseParse {
  bool ok = false;
  StructuredResponse value;
  std::size_t position = 0;
  std::string expected;
};

// strict grammar: `label: <word>; range: [<low>, <high>]; score: <value>`
inline ResponseParse parse_response(std::string_view text) {
  ResponseParse out;
  std::size_t pos = 0;
  auto fail = [&](const std::string& expected) {
    out.ok = false;
    out.position = pos;
    out.expected = expected;
    return out;
  };
  auto literal = [&](std::string_view lit) {
    if (text.substr(pos, lit.size()) != lit) return false;
    pos += lit.size();
    return true;
  };
  auto number = [&](double& v) {
    std::size_t end = pos;
    if (end < text.size() && (text[end] == '-' || text[end] == '+')) ++end;
    while (end < text.size() && (std::isdigit(static_cast<unsigned char>(text[end])) || text[end] == '.' ||
                                 text[end] == 'e' || text[end] == 'E' ||
                                 ((text[end] == '-' || text[end] == '+') && (text[end - 1] == 'e' || text[end - 1] == 'E'))))
      ++end;
    bool ok = false;
    v = parse_double(text.substr(pos, end - pos), ok);
    if (!ok) return false;
    pos = end;
    return true;
  };

  if (!literal("label: ")) return fail("'label: '");
  dataset::SynergyLabel label;
  if (literal("synergistic")) {
    label = dataset::SynergyLabel::synergistic;
  } else if (literal("antagonistic")) {
    label = dataset::SynergyLabel::antagonistic;
  } else {
    return fail("'synergistic' or 'antagonistic'");
  }
  out.value.label = label;
  if (!literal("; range: [")) return fail("'; range: ['");
  if (!number(out.value.score_low)) return fail("number");
  if (!literal(", ")) return fail("', '");
  if (!number(out.value.score_high)) return fail("number");
  if (!literal("]; score: ")) return fail("']; score: '");
  if (!number(out.value.score)) return fail("number");
  if (pos != text.size()) return fail("end of input");
  if (out.value.score_low > out.value.score_high || out.value.score < out.value.score_low ||
      out.value.score > out.value.score_high) {
    out.expected = "score within [low, high]";
    out.position = pos;
    out.ok = false;
    return out;
  }
  out.ok = true;
  return out;
}

// deterministic CoT target: the enclosing multiple-of-five band
inline StructuredResponse make_target_response(const dataset::SynergySample& s) {
  StructuredResponse r;
  r.label = s.label;
  r.score = s.score;
  r.score_low = std::floor(s.score / 5.0) * 5.0;
  r.score_high = r.score_low + 5.0;
  return r;
}

// ---------------------------------------------------------------------------
// prompt templates and rendering
// ---------------------------------------------------------------------------

enum class Stage { instruction, task };

struct PromptTemplates {
  std::string instruction;
  std::string task;
  std::vector<std::string> task_questions;  // P1..P3, "[score]" is replaced by the scheme name
  std::string instruction_question;

  static PromptTemplates defaults() {
    PromptTemplates t;
    t.instruction =
        "Cell: {CELL_DESC}\n"
        "Drug 1 SMILES: {SMILES_1}\n"
        "Drug 2 SMILES: {SMILES_2}\n"
        "Question: {QUESTION}\n"
        "Answer: ";
    t.task =
        "Cell: {CELL_DESC}\n"
        "Context: {SLOT_EC} {SLOT_ED1} {SLOT_ED2}\n"
        "Drug 1 SMILES: {SMILES_1}\n"
        "Drug 2 SMILES: {SMILES_2}\n"
        "Question: {QUESTION}\n"
        "Answer: ";
    t.task_questions = {
        "Do the two drugs exhibit synergy effects? What is their [score] synergy score?",
        "Classify the synergy effects between the two drugs and report their [score] synergy score.",
        "As a pharmacovigilance officer, how would you classify and calculate the [score] synergy score "
        "between the two drugs?",
    };
    t.instruction_question = "Describe the known properties of these two drugs.";
    return t;
  }

  static PromptTemplates from_dir(const std::string& dir) {
    auto read = [&](const std::string& name) {
      std::ifstream f(dir + "/" + name);
      if (!f) throw IoError("cannot open prompt template " + dir + "/" + name);
      std::stringstream ss;
      ss << f.rdbuf();
      return ss.str();
    };
    PromptTemplates t;
    t.instruction = read("instruction.txt");
    t.task = read("task.txt");
    t.instruction_question = trim(read("instruction_question.txt"));
    t.task_questions.clear();
    for (auto& line : split(read("task_questions.txt"), '\n')) {
      if (!trim(line).empty()) t.task_questions.push_back(trim(line));
    }
    if (t.task_questions.size() != 3) throw SchemaError("task_questions.txt must hold exactly P1..P3");
    return t;
  }
};

enum class PieceKind { text, slot_ec, slot_ed1, slot_ed2 };

struct PromptPiece {
  PieceKind kind = PieceKind::text;
  std::vector<std::int64_t> ids;  // text pieces only
  int smiles_index = 0;           // 1 or 2 when this text piece is a SMILES string
};

struct Prompt {
  Stage stage = Stage::instruction;
  std::string text;  // rendered template, slot markers elided
  std::vector<PromptPiece> pieces;

  // token count with each embedding slot counted as one position
  std::int64_t token_count() const {
    std::int64_t n = 0;
    for (const auto& p : pieces) n += p.kind == PieceKind::text ? static_cast<std::int64_t>(p.ids.size()) : 1;
    return n;
  }

  int slot_count() const {
    int n = 0;
    for (const auto& p : pieces)
      if (p.kind != PieceKind::text) ++n;
    return n;
  }
};

struct BuiltPrompt {
  Prompt prompt;
  std::string target;  // response text the model is trained to produce
};

namespace detail {

inline void append_text(Prompt& p, const std::string& text, int smiles_index = 0) {
  if (text.empty()) return;
  PromptPiece piece;
  piece.ids = vocab::tokenize(text);
  piece.smiles_index = smiles_index;
  p.pieces.push_back(std::move(piece));
  p.text += text;
}

inline Prompt render_template(Stage stage, const std::string& tmpl,
                              const std::map<std::string, std::string>& subst) {
  Prompt p;
  p.stage = stage;
  std::size_t pos = 0;
  int slots_seen = 0;
  static const std::vector<std::pair<std::string, PieceKind>> kSlots = {
      {"{SLOT_EC}", PieceKind::slot_ec}, {"{SLOT_ED1}", PieceKind::slot_ed1}, {"{SLOT_ED2}", PieceKind::slot_ed2}};
  while (pos < tmpl.size()) {
    const std::size_t brace = tmpl.find('{', pos);
    if (brace == std::string::npos) {
      append_text(p, tmpl.substr(pos));
      break;
    }
    append_text(p, tmpl.substr(pos, brace - pos));
    const std::size_t close = tmpl.find('}', brace);
    if (close == std::string::npos) throw SchemaError("unterminated placeholder in template");
    const std::string token = tmpl.substr(brace, close - brace + 1);
    bool handled = false;
    for (const auto& [marker, kind] : kSlots) {
      if (token == marker) {
        if (stage != Stage::task) throw SchemaError("embedding slot in a non-task template");
        PromptPiece piece;
        piece.kind = kind;
        p.pieces.push_back(piece);
        ++slots_seen;
        handled = true;
      }
    }
    if (!handled) {
      auto it = subst.find(token);
      if (it == subst.end()) throw SchemaError("unknown placeholder " + token);
      const int smiles_index = token == "{SMILES_1}" ? 1 : token == "{SMILES_2}" ? 2 : 0;
      append_text(p, it->second, smiles_index);
    }
    pos = close + 1;
  }
  if (stage == Stage::task) {
    if (slots_seen != 3) throw SchemaError("task template must carry exactly three embedding slots");
    // slots must appear in cell, drug1, drug2 order
    std::vector<PieceKind> order;
    for (const auto& piece : p.pieces)
      if (piece.kind != PieceKind::text) order.push_back(piece.kind);
    if (order != std::vector<PieceKind>{PieceKind::slot_ec, PieceKind::slot_ed1, PieceKind::slot_ed2})
      throw SchemaError("task template slots out of order");
  } else if (slots_seen != 0) {
    throw SchemaError("instruction template must not carry embedding slots");
  }
  return p;
}

inline std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace detail

// Renders the stage prompt for one sample. Instruction stage pairs the
// backbone with a knowledge question; the target is the retrieved
// description text. Task stage carries the three embedding slots and a
// CoT-serialized structured response as target.
inline BuiltPrompt build_prompt(Stage stage, const dataset::SynergySample& sample,
                                const std::map<std::string, dataset::DrugRecord>& drugs,
                                const dataset::CellLineProfile& cell, const KnowledgeBase& kb,
                                const PromptTemplates& templates = PromptTemplates::defaults(),
                                int question_index = 0, std::vector<std::string>* warnings = nullptr) {
  const auto& d1 = drugs.at(sample.drug_a_id);
  const auto& d2 = drugs.at(sample.drug_b_id);
  std::map<std::string, std::string> subst = {
      {"{CELL_DESC}", cell.description},
      {"{SMILES_1}", d1.smiles},
      {"{SMILES_2}", d2.smiles},
  };
  BuiltPrompt out;
  if (stage == Stage::instruction) {
    subst["{QUESTION}"] = templates.instruction_question;
    out.prompt = detail::render_template(stage, templates.instruction, subst);
    auto k1 = kb.retrieve(sample.drug_a_id);
    auto k2 = kb.retrieve(sample.drug_b_id);
    if (!k1 && !k2)
      throw MissingKnowledge("no description for either " + sample.drug_a_id + " or " + sample.drug_b_id);
    for (const auto& [id, k] : {std::pair{sample.drug_a_id, k1}, std::pair{sample.drug_b_id, k2}}) {
      if (!k && warnings) warnings->push_back("knowledge miss for drug " + id + "; sample uses one description");
    }
    std::string target;
    if (k1) target += *k1;
    if (k2) {
      if (!target.empty()) target += " ";
      target += *k2;
    }
    out.target = target;
  } else {
    if (question_index < 0 || question_index >= static_cast<int>(templates.task_questions.size()))
      throw Error("task question index out of range");
    subst["{QUESTION}"] = detail::replace_all(templates.task_questions[static_cast<std::size_t>(question_index)],
                                              "[score]", dataset::scheme_name(sample.scheme));
    out.prompt = detail::render_template(stage, templates.task, subst);
    out.target = serialize_response(make_target_response(sample));
  }
  return out;
}

// ---------------------------------------------------------------------------
// tiny decoder-only transformer
// ---------------------------------------------------------------------------

struct LmConfig {
  int layers = 2;
  int heads = 2;
  std::int64_t width = 64;
  std::int64_t max_context = 512;
};

inline void init_lm(ParamStore& store, Rng& rng, const LmConfig& cfg) {
  if (cfg.width % cfg.heads != 0) throw Error("LM width must divide evenly into heads");
  store.create("lm.tok_embed", random_normal(rng, {vocab::kSize, cfg.width}, 0.02));
  store.create("lm.pos_embed", random_normal(rng, {cfg.max_context, cfg.width}, 0.02));
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "lm.l" + std::to_string(l);
    store.create(p + ".ln1.g", Tensor::full({cfg.width}, 1.0));
    store.create(p + ".ln1.b", Tensor::zeros({cfg.width}));
    store.create(p + ".attn.wq", nas::linear_init(rng, cfg.width, cfg.width));
    store.create(p + ".attn.wk", nas::linear_init(rng, cfg.width, cfg.width));
    store.create(p + ".attn.wv", nas::linear_init(rng, cfg.width, cfg.width));
    store.create(p + ".attn.wo", nas::linear_init(rng, cfg.width, cfg.width));
    store.create(p + ".ln2.g", Tensor::full({cfg.width}, 1.0));
    store.create(p + ".ln2.b", Tensor::zeros({cfg.width}));
    store.create(p + ".ffn.w1", nas::linear_init(rng, cfg.width, 4 * cfg.width));
    store.create(p + ".ffn.b1", Tensor::zeros({4 * cfg.width}));
    store.create(p + ".ffn.w2", nas::linear_init(rng, 4 * cfg.width, cfg.width));
    store.create(p + ".ffn.b2", Tensor::zeros({cfg.width}));
  }
  store.create("lm.ln_f.g", Tensor::full({cfg.width}, 1.0));
  store.create("lm.ln_f.b", Tensor::zeros({cfg.width}));
  store.create("lm.head.w", random_normal(rng, {cfg.width, vocab::kSize}, 0.02));
}

// one element of the interleaved input sequence
struct SeqPiece {
  std::vector<std::int64_t> ids;  // token run, or
  Var rows;                       // continuous embedding rows (valid() when used)
};

struct AttentionCapture {
  std::vector<Tensor> final_layer_heads;  // [n, n] row-stochastic matrices
};

// final-layer hidden states after the closing layer norm; the logits are
// this matrix times the output head
inline Var lm_hidden(Graph& g, ParamStore& store, const LmConfig& cfg, const std::vector<SeqPiece>& pieces,
                     AttentionCapture* capture = nullptr) {
  std::vector<Var> embedded;
  std::int64_t n = 0;
  for (const auto& piece : pieces) {
    if (piece.rows.valid()) {
      if (g.val(piece.rows).cols() != cfg.width) throw ShapeMismatch("prefix rows width != LM width");
      embedded.push_back(piece.rows);
      n += g.val(piece.rows).rows();
    } else if (!piece.ids.empty()) {
      embedded.push_back(g.gather_rows(g.param(store, "lm.tok_embed"), piece.ids));
      n += static_cast<std::int64_t>(piece.ids.size());
    }
  }
  if (n == 0) throw ShapeMismatch("empty prompt");
  if (n > cfg.max_context)
    throw ContextOverflow("sequence length " + std::to_string(n) + " exceeds context " +
                          std::to_string(cfg.max_context));
  Var x = embedded.size() == 1 ? embedded[0] : g.concat(embedded, 0);
  x = g.add(x, g.slice_rows(g.param(store, "lm.pos_embed"), 0, n));

  const std::int64_t dh = cfg.width / cfg.heads;
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "lm.l" + std::to_string(l);
    Var h = g.add(g.mul(g.layer_normalize(x), g.param(store, p + ".ln1.g")), g.param(store, p + ".ln1.b"));
    Var q = g.scale(g.matmul(h, g.param(store, p + ".attn.wq")), 1.0 / std::sqrt(static_cast<double>(dh)));
    Var k = g.matmul(h, g.param(store, p + ".attn.wk"));
    Var v = g.matmul(h, g.param(store, p + ".attn.wv"));
    std::vector<Var> heads;
    for (int hd = 0; hd < cfg.heads; ++hd) {
      Var qh = g.slice_cols(q, hd * dh, dh);
      Var kh = g.slice_cols(k, hd * dh, dh);
      Var vh = g.slice_cols(v, hd * dh, dh);
      Var probs = g.causal_softmax(g.matmul(qh, g.transpose(kh)));
      if (capture && l == cfg.layers - 1) capture->final_layer_heads.push_back(g.val(probs));
      heads.push_back(g.matmul(probs, vh));
    }
    Var merged = heads.size() == 1 ? heads[0] : g.concat(heads, 1);
    x = g.add(x, g.matmul(merged, g.param(store, p + ".attn.wo")));

    Var h2 = g.add(g.mul(g.layer_normalize(x), g.param(store, p + ".ln2.g")), g.param(store, p + ".ln2.b"));
    Var f = g.tanh_(g.add(g.matmul(h2, g.param(store, p + ".ffn.w1")), g.param(store, p + ".ffn.b1")));
    x = g.add(x, g.add(g.matmul(f, g.param(store, p + ".ffn.w2")), g.param(store, p + ".ffn.b2")));
  }
  return g.add(g.mul(g.layer_normalize(x), g.param(store, "lm.ln_f.g")), g.param(store, "lm.ln_f.b"));
}

inline Var lm_forward(Graph& g, ParamStore& store, const LmConfig& cfg, const std::vector<SeqPiece>& pieces,
                      AttentionCapture* capture = nullptr) {
  return g.matmul(lm_hidden(g, store, cfg, pieces, capture), g.param(store, "lm.head.w"));
}

struct AssembledPrompt {
  std::vector<SeqPiece> pieces;
  std::int64_t prompt_positions = 0;
  std::vector<std::int64_t> smiles1_positions;  // sequence position of each SMILES character
  std::vector<std::int64_t> smiles2_positions;
};

// Interleaves prompt text tokens with the projected prefix rows.
// Instruction prompts pass invalid Vars for the slots they do not use.
inline AssembledPrompt assemble_prompt(Graph& g, const Prompt& prompt, Var e_c, Var e_d1, Var e_d2) {
  AssembledPrompt out;
  std::int64_t pos = 0;
  for (const auto& piece : prompt.pieces) {
    if (piece.kind == PieceKind::text) {
      SeqPiece sp;
      sp.ids = piece.ids;
      if (piece.smiles_index == 1 || piece.smiles_index == 2) {
        auto& span = piece.smiles_index == 1 ? out.smiles1_positions : out.smiles2_positions;
        for (std::size_t i = 0; i < piece.ids.size(); ++i) span.push_back(pos + static_cast<std::int64_t>(i));
      }
      pos += static_cast<std::int64_t>(piece.ids.size());
      out.pieces.push_back(std::move(sp));
    } else {
      Var rows = piece.kind == PieceKind::slot_ec ? e_c : piece.kind == PieceKind::slot_ed1 ? e_d1 : e_d2;
      if (!rows.valid()) throw ShapeMismatch("prompt slot has no embedding rows");
      SeqPiece sp;
      sp.rows = rows;
      pos += g.val(rows).rows();
      out.pieces.push_back(std::move(sp));
    }
  }
  out.prompt_positions = pos;
  return out;
}

// mean token-level NLL over the target positions only (prompt masked out);
// the end sentinel counts as the final target token
inline Var masked_nll(Graph& g, ParamStore& store, const LmConfig& cfg, const AssembledPrompt& prompt,
                      const std::string& target) {
  if (target.empty()) throw Error("empty target response");
  std::vector<std::int64_t> target_ids = vocab::tokenize(target);
  target_ids.push_back(vocab::kEos);
  std::vector<SeqPiece> pieces = prompt.pieces;
  SeqPiece tail;
  tail.ids = target_ids;
  pieces.push_back(std::move(tail));

  Var hidden = lm_hidden(g, store, cfg, pieces);
  const std::int64_t t = static_cast<std::int64_t>(target_ids.size());
  std::vector<std::int64_t> positions(static_cast<std::size_t>(t));
  for (std::int64_t i = 0; i < t; ++i) positions[static_cast<std::size_t>(i)] = prompt.prompt_positions - 1 + i;
  // only the positions under the loss mask go through the output head
  Var picked = g.gather_rows(hidden, positions);
  Var nll = g.softmax_xent_rows(picked, g.param(store, "lm.head.w"), target_ids);
  return g.mean(nll);
}

inline Var instruction_loss(Graph& g, ParamStore& store, const LmConfig& cfg, const AssembledPrompt& prompt,
                            const std::string& target) {
  return masked_nll(g, store, cfg, prompt, target);
}

inline Var task_loss(Graph& g, ParamStore& store, const LmConfig& cfg, const AssembledPrompt& prompt,
                     const std::string& target_response) {
  return masked_nll(g, store, cfg, prompt, target_response);
}

// deterministic argmax decoding; ties break toward the lowest token id
inline std::string greedy_decode(ParamStore& store, const LmConfig& cfg, const Prompt& prompt,
                                 const Tensor* e_c = nullptr, const Tensor* e_d1 = nullptr,
                                 const Tensor* e_d2 = nullptr, std::int64_t max_len = 256) {
  std::vector<std::int64_t> generated;
  for (std::int64_t step = 0; step < max_len; ++step) {
    Graph g;
    Var vc = e_c ? g.constant(*e_c) : Var{};
    Var v1 = e_d1 ? g.constant(*e_d1) : Var{};
    Var v2 = e_d2 ? g.constant(*e_d2) : Var{};
    auto assembled = assemble_prompt(g, prompt, vc, v1, v2);
    std::vector<SeqPiece> pieces = assembled.pieces;
    if (!generated.empty()) {
      SeqPiece tail;
      tail.ids = generated;
      pieces.push_back(std::move(tail));
    }
    Var hidden = lm_hidden(g, store, cfg, pieces);
    const std::int64_t last = g.val(hidden).rows() - 1;
    Var logits = g.matmul(g.gather_rows(hidden, {last}), g.param(store, "lm.head.w"));
    const Tensor& lv = g.val(logits);
    std::int64_t best = 0;
    double best_v = lv.at(0, 0);
    for (std::int64_t j = 1; j < vocab::kSize; ++j) {
      if (lv.at(0, j) > best_v) {
        best_v = lv.at(0, j);
        best = j;
      }
    }
    if (best == vocab::kEos) break;
    generated.push_back(best);
  }
  return vocab::detokenize(generated);
}

// ---------------------------------------------------------------------------
// metric-grade direct head
// ---------------------------------------------------------------------------

struct DirectHeadConfig {
  std::int64_t in_width = 0;  // 3*n_c*token_width + 2*x_d width
  std::int64_t hidden = 64;
  bool symmetrize = true;
};

inline void init_direct_head(ParamStore& store, Rng& rng, const DirectHeadConfig& cfg) {
  store.create("head.w1", nas::linear_init(rng, cfg.in_width, cfg.hidden));
  store.create("head.b1", Tensor::zeros({cfg.hidden}));
  store.create("head.w2", nas::linear_init(rng, cfg.hidden, 3));
  store.create("head.b2", Tensor::zeros({3}));
}

struct DirectOutput {
  Var logits;  // 2 class logits (antagonistic, synergistic)
  Var score;   // scalar regression output
};

namespace detail {

inline Var head_raw(Graph& g, ParamStore& store, Var e_c, Var e_d1, Var e_d2, Var x_d1, Var x_d2) {
  auto flat = [&](Var m) { return g.reshape(m, {g.val(m).numel()}); };
  // normalized input keeps the hidden tanh away from saturation whatever
  // scale the upstream representations arrive at
  Var z = g.layer_normalize(g.concat({flat(e_c), flat(e_d1), flat(e_d2), x_d1, x_d2}, 0));
  Var h = g.tanh_(g.add(g.matmul(z, g.param(store, "head.w1")), g.param(store, "head.b1")));
  return g.add(g.matmul(h, g.param(store, "head.w2")), g.param(store, "head.b2"));
}

}  // namespace detail

// synergy is order-invariant; with symmetrization on, both drug orders
// are averaged so swap(d1, d2) is an exact no-op
inline DirectOutput direct_head(Graph& g, ParamStore& store, const DirectHeadConfig& cfg, Var e_c, Var e_d1,
                                Var e_d2, Var x_d1, Var x_d2) {
  Var raw = detail::head_raw(g, store, e_c, e_d1, e_d2, x_d1, x_d2);
  if (cfg.symmetrize) {
    Var swapped = detail::head_raw(g, store, e_c, e_d2, e_d1, x_d2, x_d1);
    raw = g.scale(g.add(raw, swapped), 0.5);
  }
  DirectOutput out;
  out.logits = g.gather_rows(raw, {0, 1});
  out.score = g.gather_rows(raw, {2});
  return out;
}

}  // namespace synkit::lm
