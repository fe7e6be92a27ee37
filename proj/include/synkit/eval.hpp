//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "synkit/chem.hpp"
#include "synkit/common.hpp"
#include "synkit/lm.hpp"
#include "synkit/nas.hpp"

namespace synkit::evalkit {

struct Prediction {
  double prob_synergistic = 0.5;
  double score = 0.0;
  bool parse_failed = false;  // LM path: counts as worst-case regression error
};

struct TargetValue {
  int label = 0;  // 1 = synergistic
  double score = 0.0;
};

struct MetricReport {
  double acc = 0.0;
  std::optional<double> auc;  // undefined when only one class is present
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
  std::size_t parse_failure_count = 0;

  std::string to_csv() const {
    std::ostringstream os;
    os << "n,acc,auc,mae,rmse,parse_failures\n";
    os << n << ',' << format_double(acc) << ',' << (auc ? format_double(*auc) : "undefined") << ','
       << format_double(mae) << ',' << format_double(rmse) << ',' << parse_failure_count << '\n';
    return os.str();
  }
};

inline std::vector<double> average_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

// ACC at the 0.5 threshold, AUC via the rank statistic with ties counted
// half, MAE/RMSE over scores. Failed LM parses contribute |target| to
// absolute error and count in parse_failure_count.
inline MetricReport compute_metrics(const std::vector<Prediction>& preds,
                                    const std::vector<TargetValue>& targets) {
  if (preds.size() != targets.size()) throw LengthMismatch("predictions and targets differ in length");
  if (preds.empty()) throw LengthMismatch("empty metric input");
  MetricReport r;
  r.n = preds.size();

  std::size_t correct = 0;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int predicted = preds[i].prob_synergistic >= 0.5 ? 1 : 0;
    if (predicted == targets[i].label) ++correct;
    const double err = preds[i].parse_failed ? std::abs(targets[i].score) : preds[i].score - targets[i].score;
    abs_sum += std::abs(err);
    sq_sum += err * err;
    if (preds[i].parse_failed) ++r.parse_failure_count;
  }
  r.acc = static_cast<double>(correct) / static_cast<double>(r.n);
  r.mae = abs_sum / static_cast<double>(r.n);
  r.rmse = std::sqrt(sq_sum / static_cast<double>(r.n));
  if (r.rmse + 1e-12 < r.mae) throw Error("metric invariant violated: RMSE < MAE");

  std::size_t n_pos = 0;
  for (const auto& t : targets) n_pos += t.label == 1 ? 1 : 0;
  const std::size_t n_neg = targets.size() - n_pos;
  if (n_pos > 0 && n_neg > 0) {
    std::vector<double> scores;
    for (const auto& p : preds) scores.push_back(p.prob_synergistic);
    auto ranks = average_ranks(scores);
    double rank_pos = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i)
      if (targets[i].label == 1) rank_pos += ranks[i];
    r.auc = (rank_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0) /
            (static_cast<double>(n_pos) * static_cast<double>(n_neg));
  }
  return r;
}

// Pearson correlation of average ranks (ties averaged)
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw LengthMismatch("spearman inputs differ in length");
  if (xs.empty()) throw LengthMismatch("spearman on empty input");
  auto rx = average_ranks(xs);
  auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw ZeroVariance("rank variance is zero; rho undefined");
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// routing-weight structural analysis
// ---------------------------------------------------------------------------

struct RoutingRecord {
  std::string drug_id;
  int layer = 0;
  std::string op_kind;
  double alpha = 0.0;
};

inline std::string routing_records_to_csv(const std::vector<RoutingRecord>& records) {
  std::ostringstream os;
  os << "drug_id,layer,op_kind,alpha\n";
  for (const auto& r : records)
    os << r.drug_id << ',' << r.layer << ',' << r.op_kind << ',' << format_double(r.alpha) << '\n';
  return os.str();
}

inline std::vector<RoutingRecord> routing_records_from_csv(const std::string& text) {
  std::vector<RoutingRecord> out;
  auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]) != "drug_id,layer,op_kind,alpha")
    throw SchemaError("routing export: unexpected header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto cols = split(lines[i], ',');
    if (cols.size() != 4) throw SchemaError("routing export row " + std::to_string(i + 1));
    bool ok1 = false, ok2 = false;
    RoutingRecord r;
    r.drug_id = cols[0];
    r.layer = static_cast<int>(parse_double(cols[1], ok1));
    r.op_kind = cols[2];
    r.alpha = parse_double(cols[3], ok2);
    if (!ok1 || !ok2) throw SchemaError("routing export row " + std::to_string(i + 1) + ": bad number");
    out.push_back(std::move(r));
  }
  return out;
}

inline const std::vector<std::string>& descriptor_names() {
  static const std::vector<std::string> kNames = {"heavy_atoms", "rings", "aromatic_rings",
                                                  "hetero_fraction", "molecular_weight"};
  return kNames;
}

inline double descriptor_value(const chem::StructuralDescriptors& d, const std::string& name) {
  if (name == "heavy_atoms") return d.heavy_atom_count;
  if (name == "rings") return d.ring_count;
  if (name == "aromatic_rings") return d.aromatic_ring_count;
  if (name == "hetero_fraction") return d.heteroatom_fraction;
  if (name == "molecular_weight") return d.molecular_weight;
  throw Error("unknown descriptor " + name);
}

struct StructureAnalysis {
  std::vector<std::string> kinds;
  std::vector<std::string> descriptors;
  // rho[kind][descriptor]; missing value means ZeroVariance
  std::map<std::string, std::map<std::string, std::optional<double>>> rho;
  // group -> kind -> within-group mean alpha centered across kinds
  std::map<std::string, std::map<std::string, double>> group_preference;

  std::string to_csv() const {
    std::ostringstream os;
    os << "op_kind";
    for (const auto& d : descriptors) os << ",rho_" << d;
    os << '\n';
    for (const auto& k : kinds) {
      os << k;
      for (const auto& d : descriptors) {
        auto v = rho.at(k).at(d);
        os << ',' << (v ? format_double(*v) : "undefined");
      }
      os << '\n';
    }
    os << "\ngroup,op_kind,preference\n";
    for (const auto& [group, prefs] : group_preference)
      for (const auto& [kind, v] : prefs) os << group << ',' << kind << ',' << format_double(v) << '\n';
    return os.str();
  }
};

// Spearman rho between per-drug mean routing weights (averaged over
// layers) and each structural descriptor, plus mean-centered operation
// preferences inside coarse structural groups.
inline StructureAnalysis routing_structure_analysis(
    const std::vector<RoutingRecord>& records,
    const std::map<std::string, chem::StructuralDescriptors>& descriptor_table) {
  StructureAnalysis out;
  out.descriptors = descriptor_names();

  // mean alpha per (drug, kind) over layer occurrences
  std::map<std::string, std::map<std::string, std::pair<double, int>>> acc;  // drug -> kind -> (sum, count)
  for (const auto& r : records) {
    if (!descriptor_table.count(r.drug_id))
      throw DanglingReference("routing export mentions unknown drug " + r.drug_id);
    auto& slot = acc[r.drug_id][r.op_kind];
    slot.first += r.alpha;
    slot.second += 1;
  }
  if (acc.empty()) throw LengthMismatch("empty routing export");

  std::map<std::string, bool> kind_set;
  for (const auto& [drug, kinds] : acc)
    for (const auto& [k, v] : kinds) kind_set[k] = true;
  for (const auto& [k, v] : kind_set) out.kinds.push_back(k);

  std::vector<std::string> drug_ids;
  for (const auto& [drug, kinds] : acc) drug_ids.push_back(drug);

  for (const auto& kind : out.kinds) {
    std::vector<double> alphas;
    for (const auto& drug : drug_ids) {
      auto it = acc[drug].find(kind);
      alphas.push_back(it == acc[drug].end() ? 0.0 : it->second.first / it->second.second);
    }
    for (const auto& dname : out.descriptors) {
      std::vector<double> dvals;
      for (const auto& drug : drug_ids) dvals.push_back(descriptor_value(descriptor_table.at(drug), dname));
      try {
        out.rho[kind][dname] = spearman(alphas, dvals);
      } catch (const ZeroVariance&) {
        out.rho[kind][dname] = std::nullopt;
      }
    }
  }

  // structural groups by median thresholds
  auto median_of = [&](const std::string& dname) {
    std::vector<double> vals;
    for (const auto& drug : drug_ids) vals.push_back(descriptor_value(descriptor_table.at(drug), dname));
    std::sort(vals.begin(), vals.end());
    return vals[vals.size() / 2];
  };
  const double heavy_med = median_of("heavy_atoms");
  const double ring_med = median_of("rings");
  const double hetero_med = median_of("hetero_fraction");
  auto group_of = [&](const std::string& drug) {
    std::vector<std::string> groups;
    const auto& d = descriptor_table.at(drug);
    groups.push_back(d.heavy_atom_count < heavy_med ? "small" : "large");
    if (d.ring_count >= ring_med && d.ring_count > 0) groups.push_back("ring_rich");
    if (d.heteroatom_fraction >= hetero_med && d.heteroatom_fraction > 0) groups.push_back("hetero_rich");
    return groups;
  };

  std::map<std::string, std::map<std::string, std::pair<double, int>>> gacc;  // group -> kind -> (sum, n)
  for (const auto& drug : drug_ids) {
    for (const auto& group : group_of(drug)) {
      for (const auto& kind : out.kinds) {
        auto it = acc[drug].find(kind);
        const double a = it == acc[drug].end() ? 0.0 : it->second.first / it->second.second;
        auto& slot = gacc[group][kind];
        slot.first += a;
        slot.second += 1;
      }
    }
  }
  for (const auto& [group, kinds] : gacc) {
    double mean_over_kinds = 0.0;
    for (const auto& [kind, sv] : kinds) mean_over_kinds += sv.first / sv.second;
    mean_over_kinds /= static_cast<double>(kinds.size());
    for (const auto& [kind, sv] : kinds)
      out.group_preference[group][kind] = sv.first / sv.second - mean_over_kinds;
  }
  return out;
}

// ---------------------------------------------------------------------------
// SMILES character attention projection
// ---------------------------------------------------------------------------

struct SmilesAttention {
  std::string smiles;
  std::vector<double> char_scores;  // normalized over the SMILES span
  std::size_t window_start = 0;
  std::size_t window_len = 0;
  double window_fraction = 0.0;

  std::string to_csv() const {
    std::ostringstream os;
    os << "char_index,char,score\n";
    for (std::size_t i = 0; i < char_scores.size(); ++i)
      os << i << ',' << smiles[i] << ',' << format_double(char_scores[i]) << '\n';
    os << "\nwindow_start,window_len,fraction\n";
    os << window_start << ',' << window_len << ',' << format_double(window_fraction) << '\n';
    return os.str();
  }
};

// Final-layer attention from the first answer position, averaged over
// heads, restricted to one drug's SMILES characters and renormalized.
inline SmilesAttention smiles_attention(ParamStore& store, const lm::LmConfig& cfg, const lm::Prompt& prompt,
                                        const std::string& smiles, int which_drug, const Tensor* e_c,
                                        const Tensor* e_d1, const Tensor* e_d2, std::size_t window = 8) {
  Graph g;
  Var vc = e_c ? g.constant(*e_c) : Var{};
  Var v1 = e_d1 ? g.constant(*e_d1) : Var{};
  Var v2 = e_d2 ? g.constant(*e_d2) : Var{};
  auto assembled = lm::assemble_prompt(g, prompt, vc, v1, v2);
  lm::AttentionCapture capture;
  (void)lm::lm_forward(g, store, cfg, assembled.pieces, &capture);
  if (capture.final_layer_heads.empty()) throw Error("no attention captured");

  const auto& positions = which_drug == 1 ? assembled.smiles1_positions : assembled.smiles2_positions;
  if (positions.empty()) throw Error("prompt has no SMILES span for drug " + std::to_string(which_drug));
  if (positions.size() != smiles.size()) throw LengthMismatch("SMILES text does not match the prompt span");

  const std::int64_t query = assembled.prompt_positions - 1;  // first answer position
  SmilesAttention out;
  out.smiles = smiles;
  double total = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    double a = 0.0;
    for (const auto& head : capture.final_layer_heads) a += head.at(query, positions[i]);
    a /= static_cast<double>(capture.final_layer_heads.size());
    out.char_scores.push_back(a);
    total += a;
  }
  if (total > 0.0)
    for (double& s : out.char_scores) s /= total;

  const std::size_t w = std::min(window, out.char_scores.size());
  double best = -1.0;
  for (std::size_t start = 0; start + w <= out.char_scores.size(); ++start) {
    double s = 0.0;
    for (std::size_t i = 0; i < w; ++i) s += out.char_scores[start + i];
    if (s > best) {
      best = s;
      out.window_start = start;
    }
  }
  out.window_len = w;
  out.window_fraction = best;
  return out;
}

}  // namespace synkit::evalkit
