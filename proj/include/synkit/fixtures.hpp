//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "synkit/chem.hpp"
#include "synkit/common.hpp"

namespace synkit::fixtures {

struct FixtureConfig {
  std::uint64_t seed = 42;
  int n_drugs = 24;       // >= 5; the first five are reference molecules
  int n_cells = 4;
  int n_triplets = 200;
  int expression_dim = 16;
  int target_dim = 8;
  int n_targets = 8;
};

// Reference molecules shipped with every fixture set. Heavy-atom and
// ring counts for these live in tests/data/parser_oracle.csv.
inline const std::vector<std::string>& reference_smiles() {
  static const std::vector<std::string> kRef = {
      "CN1C(=O)N2C=NC(=C2N=N1)C(=O)N",
      "CS(=O)(=O)C1=CC(=C(C=C1)C(=O)NC2=CC(=C(C=C2)Cl)C3=CC=CC=N3)Cl",
      "CCCCCCCCC1=CC=C(C=C1)CCC(CO)(CO)N",
      "C1[C@H]([C@H](O[C@H]1N2C=NC(=NC2=O)N)CO)O",
      "CC1(C(=O)NC(=O)N1C2=CC(=C(C=C2)[N+](=O)[O-])C(F)(F)F)C",
  };
  return kRef;
}

namespace detail {

inline std::string drug_name(int k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "D%03d", k + 1);
  return buf;
}

inline std::string cell_name(int k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "CL%02d", k + 1);
  return buf;
}

inline std::string target_name(int k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "T%03d", k + 1);
  return buf;
}

// families share a scaffold group: benzene, pyridine, acyclic (empty
// scaffold); every second drug gets an iodine-heavy prefix so the
// molecular weights straddle the 305 Da landmark.
inline std::string synth_smiles(int k, Rng& rng) {
  const int family = k % 3;
  const bool heavy = (k % 2) == 0;
  std::string chain;
  const int len = static_cast<int>(rng.uniform_int(1, 6));
  for (int i = 0; i < len; ++i) chain += (i == 1 && rng.uniform() < 0.4) ? 'O' : 'C';
  std::string s = heavy ? "IC(I)" + chain : chain;
  if (family == 0) s += "c1ccccc1";
  else if (family == 1) s += "c1ccncc1";
  else if (rng.uniform() < 0.5) s += "C(=O)O";
  return s;
}

}  // namespace detail

struct FixturePaths {
  std::string triplets;
  std::string expression;
  std::string drugs;
  std::string targets;
  std::string knowledge;
};

inline FixturePaths fixture_paths(const std::string& dir) {
  return {dir + "/triplets.csv", dir + "/expression.csv", dir + "/drugs.csv", dir + "/targets.csv",
          dir + "/knowledge.jsonl"};
}

// Deterministic synthetic corpus: same seed, byte-identical files.
inline FixturePaths gen_fixtures(const std::string& dir, const FixtureConfig& cfg = {}) {
  if (cfg.n_drugs < 5) throw Error("fixture set needs at least the 5 reference drugs");
  std::filesystem::create_directories(dir);
  const FixturePaths paths = fixture_paths(dir);
  Rng root(cfg.seed);

  std::vector<std::string> drug_ids, smiles;
  {
    Rng rng = root.fork("fixture-drugs");
    for (int k = 0; k < cfg.n_drugs; ++k) {
      drug_ids.push_back(detail::drug_name(k));
      if (k < static_cast<int>(reference_smiles().size())) {
        smiles.push_back(reference_smiles()[static_cast<std::size_t>(k)]);
      } else {
        smiles.push_back(detail::synth_smiles(k, rng));
      }
      (void)chem::parse_smiles(smiles.back());  // generator output must stay inside the grammar
    }
  }

  {
    Rng rng = root.fork("fixture-targets");
    std::ofstream f(paths.targets);
    f << "target_id";
    for (int j = 0; j < cfg.target_dim; ++j) f << ",t" << j;
    f << "\n";
    for (int k = 0; k < cfg.n_targets; ++k) {
      f << detail::target_name(k);
      for (int j = 0; j < cfg.target_dim; ++j) f << ',' << format_double(rng.normal());
      f << "\n";
    }
  }

  {
    Rng rng = root.fork("fixture-drug-targets");
    std::ofstream f(paths.drugs);
    f << "drug_id,smiles,target_ids\n";
    for (int k = 0; k < cfg.n_drugs; ++k) {
      const int n_t = static_cast<int>(rng.uniform_int(0, 2));  // some drugs have no targets
      std::string tids;
      int prev = -1;
      for (int j = 0; j < n_t; ++j) {
        int t = static_cast<int>(rng.uniform_int(0, cfg.n_targets - 1));
        if (t == prev) t = (t + 1) % cfg.n_targets;
        prev = t;
        if (!tids.empty()) tids += ';';
        tids += detail::target_name(t);
      }
      f << drug_ids[k] << ',' << smiles[k] << ',' << tids << "\n";
    }
  }

  {
    Rng rng = root.fork("fixture-expression");
    std::ofstream f(paths.expression);
    f << "cell_line_id";
    for (int j = 0; j < cfg.expression_dim; ++j) f << ",g" << j;
    f << "\n";
    for (int k = 0; k < cfg.n_cells; ++k) {
      f << detail::cell_name(k);
      for (int j = 0; j < cfg.expression_dim; ++j) f << ',' << format_double(rng.normal());
      f << "\n";
    }
  }

  {
    Rng rng = root.fork("fixture-triplets");
    std::ofstream f(paths.triplets);
    f << "drug_a_id,drug_b_id,cell_line_id,scheme,score\n";
    static const char* kSchemes[] = {"loewe", "bliss", "hsa", "zip"};
    for (int k = 0; k < cfg.n_triplets; ++k) {
      int a = static_cast<int>(rng.uniform_int(0, cfg.n_drugs - 1));
      int b = static_cast<int>(rng.uniform_int(0, cfg.n_drugs - 1));
      if (a == b) b = (b + 1) % cfg.n_drugs;
      const int c = static_cast<int>(rng.uniform_int(0, cfg.n_cells - 1));
      const char* scheme = kSchemes[rng.uniform_int(0, 3)];
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      const double magnitude = rng.uniform() < 0.85 ? rng.uniform(10.0, 40.0) : rng.uniform(2.0, 10.0);
      const double score = sign * std::round(magnitude * 10.0) / 10.0;
      f << drug_ids[a] << ',' << drug_ids[b] << ',' << detail::cell_name(c) << ',' << scheme << ','
        << format_double(score) << "\n";
    }
  }

  {
    Rng rng = root.fork("fixture-knowledge");
    std::ofstream f(paths.knowledge);
    for (int k = 0; k < cfg.n_drugs; ++k) {
      if (k % 11 == 6) continue;  // leave a couple of drugs without knowledge
      const auto d = chem::structural_descriptors(chem::parse_smiles(smiles[k]));
      std::string desc = drug_ids[k] + " is a compound with " + std::to_string(d.heavy_atom_count) +
                         " heavy atoms and " + std::to_string(d.ring_count) + " rings";
      if (rng.uniform() < 0.5) desc += " used in combination screens";
      desc += ".";
      f << "{\"drug_id\": \"" << drug_ids[k] << "\", \"description\": \"" << desc << "\"}\n";
    }
  }

  return paths;
}

}  // namespace synkit::fixtures
