//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <string>
#include <vector>

#include "synkit/chem.hpp"

using namespace synkit;
using namespace synkit::chem;

namespace {

// Random strings drawn from the supported grammar: subset atoms, bonds,
// branches, paired ring closures, bracket atoms with H/charge.
std::string random_smiles(Rng& rng) {
  static const char* kAliphatic[] = {"C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B"};
  std::string out;
  int ring_digit = static_cast<int>(rng.uniform_int(1, 9));
  bool ring_open = false;
  int ring_len = 0;

  auto emit_atom = [&]() {
    double r = rng.uniform();
    if (r < 0.15) {
      // bracket atom with optional H count and charge
      out += '[';
      out += kAliphatic[rng.uniform_int(0, 3)];
      if (rng.uniform() < 0.5) {
        out += 'H';
        if (rng.uniform() < 0.5) out += static_cast<char>('1' + rng.uniform_int(0, 2));
      }
      if (rng.uniform() < 0.5) out += (rng.uniform() < 0.5 ? '+' : '-');
      out += ']';
    } else {
      out += kAliphatic[rng.uniform_int(0, 9)];
    }
  };

  const int chain = static_cast<int>(rng.uniform_int(2, 10));
  for (int i = 0; i < chain; ++i) {
    if (i > 0 && rng.uniform() < 0.2) out += (rng.uniform() < 0.5 ? '=' : '#');
    emit_atom();
    if (!ring_open && rng.uniform() < 0.25 && i + 3 <= chain) {
      out += static_cast<char>('0' + ring_digit);
      ring_open = true;
      ring_len = 0;
    } else if (ring_open && ++ring_len >= 2 && rng.uniform() < 0.5) {
      out += static_cast<char>('0' + ring_digit);
      ring_open = false;
    }
    if (rng.uniform() < 0.2) {
      out += '(';
      const int blen = static_cast<int>(rng.uniform_int(1, 3));
      for (int k = 0; k < blen; ++k) emit_atom();
      out += ')';
    }
  }
  if (ring_open) {
    emit_atom();
    emit_atom();
    out += static_cast<char>('0' + ring_digit);
  }
  if (rng.uniform() < 0.3) out += "c1ccccc1";
  return out;
}

}  // namespace

TEST_SUITE("chem") {

TEST_CASE("single carbon") {
  auto g = parse_smiles("C");
  REQUIRE(g.atoms.size() == 1);
  CHECK(g.bonds.empty());
  CHECK(g.atoms[0].element == "C");
  CHECK(g.atoms[0].implicit_h == 4);
}

TEST_CASE("ethanol") {
  auto g = parse_smiles("CCO");
  REQUIRE(g.atoms.size() == 3);
  REQUIRE(g.bonds.size() == 2);
  CHECK(g.bonds[0].order == BondOrder::Single);
  CHECK(g.bonds[1].order == BondOrder::Single);
  CHECK(g.atoms[2].element == "O");
  CHECK(g.atoms[0].implicit_h == 3);
  CHECK(g.atoms[1].implicit_h == 2);
  CHECK(g.atoms[2].implicit_h == 1);
}

TEST_CASE("temozolomide atom census") {
  // hand enumeration: 6 C, 6 N, 2 O; bicyclic
  auto g = parse_smiles("CN1C(=O)N2C=NC(=C2N=N1)C(=O)N");
  REQUIRE(g.atoms.size() == 14);
  int c = 0, n = 0, o = 0;
  for (const auto& a : g.atoms) {
    if (a.element == "C") ++c;
    if (a.element == "N") ++n;
    if (a.element == "O") ++o;
  }
  CHECK(c == 6);
  CHECK(n == 6);
  CHECK(o == 2);
  auto d = structural_descriptors(g);
  CHECK(d.ring_count == 2);
}

TEST_CASE("molecular weight landmarks") {
  CHECK(molecular_weight(MolecularGraph{}) == 0.0);
  CHECK(molecular_weight(parse_smiles("C")) == doctest::Approx(16.043).epsilon(1e-3));
  CHECK(molecular_weight(parse_smiles("CCO")) == doctest::Approx(46.069).epsilon(1e-3));
}

TEST_CASE("weight is additive over components") {
  auto a = parse_smiles("CCO");
  auto b = parse_smiles("c1ccccc1");
  MolecularGraph merged = a;
  const int off = static_cast<int>(a.atoms.size());
  for (const auto& at : b.atoms) merged.atoms.push_back(at);
  for (const auto& bd : b.bonds) merged.bonds.push_back({bd.a + off, bd.b + off, bd.order});
  CHECK(molecular_weight(merged) ==
        doctest::Approx(molecular_weight(a) + molecular_weight(b)).epsilon(1e-12));
}

TEST_CASE("murcko scaffold of acyclic molecule is empty") {
  CHECK(murcko_scaffold(parse_smiles("CCO")).atoms.empty());
  CHECK(scaffold_key(parse_smiles("CCO")) == "");
}

TEST_CASE("benzene is its own scaffold") {
  auto g = parse_smiles("c1ccccc1");
  auto s = murcko_scaffold(g);
  CHECK(s.atoms.size() == 6);
  CHECK(s.bonds.size() == 6);
}

TEST_CASE("phenylacetic acid reduces to benzene") {
  // manual reduction: strip CH2, C(=O), both oxygens
  auto s = murcko_scaffold(parse_smiles("c1ccccc1CC(=O)O"));
  CHECK(s.atoms.size() == 6);
  CHECK(s.bonds.size() == 6);
  for (const auto& a : s.atoms) CHECK(a.element == "C");
}

TEST_CASE("scaffold is idempotent") {
  for (const char* smi : {"c1ccccc1CC(=O)O", "CN1C(=O)N2C=NC(=C2N=N1)C(=O)N", "CCO", "C1CCCCC1CCN"}) {
    auto s1 = murcko_scaffold(parse_smiles(smi));
    auto s2 = murcko_scaffold(s1);
    CHECK(s1.atoms.size() == s2.atoms.size());
    CHECK(s1.bonds.size() == s2.bonds.size());
    CHECK(canonical_key(s1) == canonical_key(s2));
  }
}

TEST_CASE("scaffold grouping key matches across atom orderings") {
  CHECK(scaffold_key(parse_smiles("c1ccccc1CC")) == scaffold_key(parse_smiles("CCc1ccccc1")));
  CHECK(scaffold_key(parse_smiles("C1CCCCC1N")) == scaffold_key(parse_smiles("NC1CCCCC1")));
  CHECK(scaffold_key(parse_smiles("c1ccccc1")) != scaffold_key(parse_smiles("C1CCCCC1")));
}

TEST_CASE("descriptors: hand counts") {
  auto d = structural_descriptors(parse_smiles("CCO"));
  CHECK(d.heavy_atom_count == 3);
  CHECK(d.ring_count == 0);
  CHECK(d.aromatic_ring_count == 0);
  CHECK(d.heteroatom_fraction == doctest::Approx(1.0 / 3.0));

  auto b = structural_descriptors(parse_smiles("c1ccccc1"));
  CHECK(b.heavy_atom_count == 6);
  CHECK(b.ring_count == 1);
  CHECK(b.aromatic_ring_count == 1);
  CHECK(b.heteroatom_fraction == 0.0);

  auto e = structural_descriptors(MolecularGraph{});
  CHECK(e.heavy_atom_count == 0);
  CHECK(e.ring_count == 0);
  CHECK(e.heteroatom_fraction == 0.0);
  CHECK(e.molecular_weight == 0.0);
}

TEST_CASE("atom features layout") {
  auto one = atom_features(parse_smiles("C"), kMinFeatureDim);
  REQUIRE(one.rows() == 1);
  double elem_sum = 0.0;
  for (int j = 0; j < kElementClasses; ++j) elem_sum += one.at(0, j);
  CHECK(elem_sum == 1.0);
  CHECK(one.at(0, element_class("C")) == 1.0);

  auto eth = atom_features(parse_smiles("CCO"), 24);
  REQUIRE(eth.rows() == 3);
  REQUIRE(eth.cols() == 24);
  CHECK(eth.at(0, kElementClasses + 1) == 1.0);  // degree 1
  CHECK(eth.at(1, kElementClasses + 2) == 1.0);  // degree 2
  CHECK(eth.at(2, kElementClasses + 1) == 1.0);  // degree 1

  CHECK_THROWS_AS((void)atom_features(parse_smiles("C"), kMinFeatureDim - 1), FeatureDimTooSmall);
}

TEST_CASE("one-hot blocks always sum to one") {
  Rng rng(99);
  for (int t = 0; t < 50; ++t) {
    auto g = parse_smiles(random_smiles(rng));
    auto f = atom_features(g, 32);
    for (std::int64_t i = 0; i < f.rows(); ++i) {
      double es = 0.0, ds = 0.0;
      for (int j = 0; j < kElementClasses; ++j) es += f.at(i, j);
      for (int j = 0; j < kDegreeClasses; ++j) ds += f.at(i, kElementClasses + j);
      CHECK(es == 1.0);
      CHECK(ds == 1.0);
    }
  }
}

TEST_CASE("parse errors carry byte offsets") {
  CHECK_THROWS_AS((void)parse_smiles("C1CC"), UnbalancedRingClosure);
  CHECK_THROWS_AS((void)parse_smiles("C(C"), UnbalancedParenthesis);
  CHECK_THROWS_AS((void)parse_smiles("CC)C"), UnbalancedParenthesis);
  CHECK_THROWS_AS((void)parse_smiles("CXC"), UnsupportedToken);
  CHECK_THROWS_AS((void)parse_smiles(""), UnsupportedToken);
  CHECK_THROWS_AS((void)parse_smiles("C=="), UnsupportedToken);
  try {
    (void)parse_smiles("CCXC");
  } catch (const UnsupportedToken& e) {
    CHECK(e.offset == 2);
  }
  try {
    (void)parse_smiles("CC1CC");
  } catch (const UnbalancedRingClosure& e) {
    CHECK(e.offset == 2);
  }
}

TEST_CASE("stereo markers are ignored with a warning") {
  std::vector<std::string> warnings;
  auto g = parse_smiles("C1[C@H]([C@H](O[C@H]1N2C=NC(=NC2=O)N)CO)O", &warnings);
  CHECK(g.atoms.size() == 16);
  CHECK(!warnings.empty());
  auto g2 = parse_smiles("C/C=C/C", &warnings);
  CHECK(g2.atoms.size() == 4);
}

TEST_CASE("bracket charges parse") {
  auto g = parse_smiles("CC1(C(=O)NC(=O)N1C2=CC(=C(C=C2)[N+](=O)[O-])C(F)(F)F)C");
  REQUIRE(g.atoms.size() == 22);
  int plus = 0, minus = 0;
  for (const auto& a : g.atoms) {
    if (a.formal_charge > 0) ++plus;
    if (a.formal_charge < 0) ++minus;
  }
  CHECK(plus == 1);
  CHECK(minus == 1);
  CHECK(structural_descriptors(g).ring_count == 2);
}

TEST_CASE("parsing is deterministic") {
  Rng rng(7);
  for (int t = 0; t < 30; ++t) {
    const std::string smi = random_smiles(rng);
    auto a = parse_smiles(smi);
    auto b = parse_smiles(smi);
    REQUIRE(a.atoms.size() == b.atoms.size());
    REQUIRE(a.bonds.size() == b.bonds.size());
    for (std::size_t i = 0; i < a.atoms.size(); ++i) {
      CHECK(a.atoms[i].element == b.atoms[i].element);
      CHECK(a.atoms[i].implicit_h == b.atoms[i].implicit_h);
    }
  }
}

TEST_CASE("fuzz: grammar strings always parse and yield descriptors") {
  Rng rng(1234);
  for (int t = 0; t < 300; ++t) {
    const std::string smi = random_smiles(rng);
    CAPTURE(smi);
    auto g = parse_smiles(smi);
    auto d = structural_descriptors(g);
    CHECK(d.heavy_atom_count >= 1);
    CHECK(d.molecular_weight > 0.0);
    CHECK(d.ring_count >= 0);
    CHECK(d.heteroatom_fraction >= 0.0);
    CHECK(d.heteroatom_fraction <= 1.0);
    auto s = murcko_scaffold(g);
    CHECK(canonical_key(murcko_scaffold(s)) == canonical_key(s));
  }
}

TEST_CASE("aromatic bond invariant") {
  auto g = parse_smiles("c1ccccc1");
  for (const auto& b : g.bonds) {
    CHECK(b.order == BondOrder::Aromatic);
    CHECK(g.atoms[b.a].aromatic);
    CHECK(g.atoms[b.b].aromatic);
  }
  // explicit ':' between aliphatic atoms violates the invariant
  CHECK_THROWS_AS((void)parse_smiles("C:C"), UnsupportedToken);
}

}  // TEST_SUITE
