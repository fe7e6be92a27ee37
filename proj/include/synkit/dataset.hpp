//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "synkit/chem.hpp"
#include "synkit/common.hpp"

namespace synkit::dataset {

enum class Scheme { loewe, bliss, hsa, zip };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::loewe: return "loewe";
    case Scheme::bliss: return "bliss";
    case Scheme::hsa: return "hsa";
    case Scheme::zip: return "zip";
  }
  return "?";
}

inline Scheme scheme_from(std::string_view name, std::size_t row) {
  if (name == "loewe") return Scheme::loewe;
  if (name == "bliss") return Scheme::bliss;
  if (name == "hsa") return Scheme::hsa;
  if (name == "zip") return Scheme::zip;
  throw SchemaError("unknown scheme '" + std::string(name) + "' at row " + std::to_string(row));
}

enum class SynergyLabel { antagonistic = 0, synergistic = 1 };

struct SynergySample {
  std::string drug_a_id;
  std::string drug_b_id;
  std::string cell_line_id;
  Scheme scheme = Scheme::loewe;
  double score = 0.0;
  SynergyLabel label = SynergyLabel::antagonistic;  // meaningful after filter_and_label
};

struct CellLineProfile {
  std::string cell_line_id;
  std::vector<double> expression;
  std::string description;
};

struct DrugRecord {
  std::string drug_id;
  std::string smiles;
  std::optional<std::string> knowledge_text;
  std::vector<std::string> target_ids;
};

struct TargetEmbedding {
  std::string target_id;
  std::vector<double> vec;
};

using SampleTable = std::vector<SynergySample>;

struct DataBundle {
  SampleTable samples;
  std::map<std::string, CellLineProfile> profiles;
  std::map<std::string, DrugRecord> drugs;
  std::map<std::string, TargetEmbedding> targets;
  std::size_t expression_dim = 0;  // G
  std::size_t target_dim = 0;      // D_t
  std::vector<std::string> warnings;
};

enum class SplitCriterion { scaffold, size };

inline const char* criterion_name(SplitCriterion c) {
  return c == SplitCriterion::scaffold ? "scaffold" : "size";
}

struct SplitPartition {
  SplitCriterion criterion = SplitCriterion::scaffold;
  double theta = 0.0;
  std::set<std::string> id_drugs;
  std::set<std::string> ood_drugs;
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                                      const std::vector<std::string>& required_prefix) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split(line, ','));
  }
  if (rows.empty()) throw SchemaError(path + ": missing header row");
  const auto& header = rows.front();
  if (header.size() < required_prefix.size())
    throw SchemaError(path + ": expected at least " + std::to_string(required_prefix.size()) + " columns");
  for (std::size_t i = 0; i < required_prefix.size(); ++i) {
    if (header[i] != required_prefix[i])
      throw SchemaError(path + ": column " + std::to_string(i) + " is '" + header[i] + "', expected '" +
                        required_prefix[i] + "'");
  }
  return rows;
}

inline double numeric(const std::string& s, const std::string& where) {
  bool ok = false;
  double v = parse_double(trim(s), ok);
  if (!ok || !std::isfinite(v)) throw SchemaError("non-numeric value '" + s + "' in " + where);
  return v;
}

}  // namespace detail

// triplets.csv: drug_a_id,drug_b_id,cell_line_id,scheme,score
// expression.csv: cell_line_id,<gene names...>
// drugs.csv: drug_id,smiles,target_ids (';'-separated)
// targets.csv: target_id,<dims...>
inline DataBundle ingest(const std::string& triplet_file, const std::string& expression_file,
                         const std::string& drug_file, const std::string& target_file) {
  DataBundle out;

  {
    auto rows = detail::read_csv(expression_file, {"cell_line_id"});
    out.expression_dim = rows.front().size() - 1;
    if (out.expression_dim == 0) throw SchemaError(expression_file + ": no gene columns");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() != out.expression_dim + 1)
        throw SchemaError(expression_file + ": row " + std::to_string(r + 1) + " has " +
                          std::to_string(row.size() - 1) + " genes, expected " +
                          std::to_string(out.expression_dim));
      CellLineProfile p;
      p.cell_line_id = trim(row[0]);
      for (std::size_t j = 1; j < row.size(); ++j)
        p.expression.push_back(detail::numeric(row[j], expression_file));
      p.description = "cell line " + p.cell_line_id;
      out.profiles[p.cell_line_id] = std::move(p);
    }
  }

  {
    auto rows = detail::read_csv(target_file, {"target_id"});
    out.target_dim = rows.front().size() - 1;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() != out.target_dim + 1)
        throw SchemaError(target_file + ": row " + std::to_string(r + 1) + " width mismatch");
      TargetEmbedding t;
      t.target_id = trim(row[0]);
      for (std::size_t j = 1; j < row.size(); ++j) t.vec.push_back(detail::numeric(row[j], target_file));
      out.targets[t.target_id] = std::move(t);
    }
  }

  {
    auto rows = detail::read_csv(drug_file, {"drug_id", "smiles", "target_ids"});
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      DrugRecord d;
      d.drug_id = trim(row[0]);
      d.smiles = trim(row[1]);
      (void)chem::parse_smiles(d.smiles);  // ParseError propagates with offsets
      if (row.size() > 2 && !trim(row[2]).empty()) {
        for (auto& tid : split(trim(row[2]), ';')) {
          tid = trim(tid);
          if (tid.empty()) continue;
          if (out.targets.count(tid)) {
            d.target_ids.push_back(tid);
          } else {
            out.warnings.push_back("drug " + d.drug_id + ": dropped unresolvable target id " + tid);
          }
        }
      }
      out.drugs[d.drug_id] = std::move(d);
    }
  }

  {
    auto rows = detail::read_csv(triplet_file, {"drug_a_id", "drug_b_id", "cell_line_id", "scheme", "score"});
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() != 5) throw SchemaError(triplet_file + ": row " + std::to_string(r + 1) + " needs 5 columns");
      SynergySample s;
      s.drug_a_id = trim(row[0]);
      s.drug_b_id = trim(row[1]);
      s.cell_line_id = trim(row[2]);
      s.scheme = scheme_from(trim(row[3]), r + 1);
      s.score = detail::numeric(row[4], triplet_file);
      for (const auto& d : {s.drug_a_id, s.drug_b_id}) {
        if (!out.drugs.count(d))
          throw DanglingReference(triplet_file + " row " + std::to_string(r + 1) + ": unknown drug " + d);
      }
      if (!out.profiles.count(s.cell_line_id))
        throw DanglingReference(triplet_file + " row " + std::to_string(r + 1) + ": unknown cell line " +
                                s.cell_line_id);
      out.samples.push_back(std::move(s));
    }
  }

  return out;
}

// keeps |score| >= tau (inclusive); label follows the score sign
inline SampleTable filter_and_label(const SampleTable& samples, double tau) {
  if (tau <= 0.0) throw Error("filter threshold must be positive");
  SampleTable out;
  for (const auto& s : samples) {
    if (std::abs(s.score) < tau) continue;
    SynergySample kept = s;
    kept.label = s.score >= tau ? SynergyLabel::synergistic : SynergyLabel::antagonistic;
    out.push_back(std::move(kept));
  }
  return out;
}

// scaffold: a drug is I.D. iff its scaffold group population > theta;
// size: I.D. iff molecular weight > theta.
inline SplitPartition ood_split(const std::map<std::string, DrugRecord>& drugs, SplitCriterion criterion,
                                double theta) {
  if (!std::isfinite(theta)) throw Error("theta must be finite");
  SplitPartition p;
  p.criterion = criterion;
  p.theta = theta;
  if (criterion == SplitCriterion::scaffold) {
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& [id, d] : drugs)
      groups[chem::scaffold_key(chem::parse_smiles(d.smiles))].push_back(id);
    for (const auto& [key, members] : groups) {
      const bool in_dist = static_cast<double>(members.size()) > theta;
      for (const auto& id : members) (in_dist ? p.id_drugs : p.ood_drugs).insert(id);
    }
  } else {
    for (const auto& [id, d] : drugs) {
      const double w = chem::molecular_weight(chem::parse_smiles(d.smiles));
      (w > theta ? p.id_drugs : p.ood_drugs).insert(id);
    }
  }
  if (p.id_drugs.empty() || p.ood_drugs.empty())
    throw EmptyPartition(std::string(criterion_name(criterion)) + " split with theta " + format_double(theta) +
                         " left one side empty");
  return p;
}

// train: both drugs I.D.; everything touching an O.O.D. drug is shuffled
// (seeded) and divided valid:test at the given ratio.
inline SplitPartition assemble_splits(const SampleTable& samples, SplitPartition partition,
                                      int valid_ratio, int test_ratio, std::uint64_t seed) {
  if (partition.id_drugs.empty() || partition.ood_drugs.empty())
    throw EmptyPartition("assemble_splits needs both partition sides populated");
  if (valid_ratio <= 0 || test_ratio <= 0) throw Error("split ratio parts must be positive");
  partition.train.clear();
  partition.valid.clear();
  partition.test.clear();
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const bool a_id = partition.id_drugs.count(s.drug_a_id) > 0;
    const bool b_id = partition.id_drugs.count(s.drug_b_id) > 0;
    const bool a_known = a_id || partition.ood_drugs.count(s.drug_a_id) > 0;
    const bool b_known = b_id || partition.ood_drugs.count(s.drug_b_id) > 0;
    if (!a_known || !b_known) continue;  // drug outside the partition: sample not covered
    if (a_id && b_id) {
      partition.train.push_back(i);
    } else {
      pool.push_back(i);
    }
  }
  if (pool.empty()) throw NoOodSamples("no sample touches an O.O.D. drug");
  Rng rng = Rng(seed).fork("split-shuffle");
  for (std::size_t i = pool.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(pool[i - 1], pool[j]);
  }
  const std::size_t n_valid =
      pool.size() * static_cast<std::size_t>(valid_ratio) / static_cast<std::size_t>(valid_ratio + test_ratio);
  partition.valid.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_valid));
  partition.test.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_valid), pool.end());
  return partition;
}

// one CSV row in the splitting-statistics column order
inline std::string split_report(const SplitPartition& p) {
  std::ostringstream os;
  os << "criterion,theta,id_drugs,ood_drugs,train,valid,test\n";
  os << criterion_name(p.criterion) << ',' << format_double(p.theta) << ',' << p.id_drugs.size() << ','
     << p.ood_drugs.size() << ',' << p.train.size() << ',' << p.valid.size() << ',' << p.test.size() << '\n';
  return os.str();
}

inline std::string split_report_counts(SplitCriterion criterion, double theta, std::size_t n_id,
                                       std::size_t n_ood, std::size_t n_train, std::size_t n_valid,
                                       std::size_t n_test) {
  std::ostringstream os;
  os << "criterion,theta,id_drugs,ood_drugs,train,valid,test\n";
  os << criterion_name(criterion) << ',' << format_double(theta) << ',' << n_id << ',' << n_ood << ','
     << n_train << ',' << n_valid << ',' << n_test << '\n';
  return os.str();
}

}  // namespace synkit::dataset
