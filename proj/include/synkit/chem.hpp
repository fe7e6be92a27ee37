//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synkit/common.hpp"
#include "synkit/tensor.hpp"

namespace synkit::chem {

enum class BondOrder : std::uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

struct AtomRecord {
  std::string element;     // canonical symbol, e.g. "C", "Cl"
  bool aromatic = false;
  int formal_charge = 0;
  bool in_ring = false;
  int implicit_h = 0;
  bool explicit_h_set = false;  // bracket atoms carry their H count verbatim
};

struct BondRecord {
  int a = -1;
  int b = -1;
  BondOrder order = BondOrder::Single;
};

struct MolecularGraph {
  std::vector<AtomRecord> atoms;
  std::vector<BondRecord> bonds;
  std::string source_smiles;

  std::size_t atom_count() const { return atoms.size(); }
  std::size_t bond_count() const { return bonds.size(); }

  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(atoms.size());
    for (const auto& b : bonds) {
      adj[b.a].push_back(b.b);
      adj[b.b].push_back(b.a);
    }
    return adj;
  }

  int degree(int atom) const {
    int d = 0;
    for (const auto& b : bonds)
      if (b.a == atom || b.b == atom) ++d;
    return d;
  }
};

struct StructuralDescriptors {
  int heavy_atom_count = 0;
  int ring_count = 0;
  int aromatic_ring_count = 0;
  double heteroatom_fraction = 0.0;
  double molecular_weight = 0.0;
};

namespace detail {

// standard atomic weights, 3 decimals
inline double atomic_mass(std::string_view sym) {
  static const std::map<std::string, double, std::less<>> kMasses = {
      {"H", 1.008},   {"B", 10.811},  {"C", 12.011},  {"N", 14.007},
      {"O", 15.999},  {"F", 18.998},  {"P", 30.974},  {"S", 32.060},
      {"Cl", 35.453}, {"Br", 79.904}, {"I", 126.904},
  };
  auto it = kMasses.find(sym);
  if (it == kMasses.end()) throw Error("no mass for element " + std::string(sym));
  return it->second;
}

// Daylight-style default valences; first entry >= bond order sum wins.
inline const std::vector<int>& default_valences(std::string_view sym) {
  static const std::map<std::string, std::vector<int>, std::less<>> kValences = {
      {"B", {3}},  {"C", {4}},   {"N", {3, 5}}, {"O", {2}},  {"P", {3, 5}},
      {"S", {2, 4, 6}}, {"F", {1}},   {"Cl", {1}},   {"Br", {1}}, {"I", {1}},
  };
  auto it = kValences.find(sym);
  if (it == kValences.end()) {
    static const std::vector<int> none;
    return none;
  }
  return it->second;
}

inline bool organic_element(std::string_view sym) {
  return sym == "B" || sym == "C" || sym == "N" || sym == "O" || sym == "P" ||
         sym == "S" || sym == "F" || sym == "Cl" || sym == "Br" || sym == "I";
}

inline double order_value(BondOrder o) {
  switch (o) {
    case BondOrder::Single: return 1.0;
    case BondOrder::Double: return 2.0;
    case BondOrder::Triple: return 3.0;
    case BondOrder::Aromatic: return 1.5;
  }
  return 1.0;
}

inline void assign_implicit_hydrogens(MolecularGraph& g) {
  std::vector<double> order_sum(g.atoms.size(), 0.0);
  for (const auto& b : g.bonds) {
    const double o = order_value(b.order);
    order_sum[b.a] += o;
    order_sum[b.b] += o;
  }
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    AtomRecord& a = g.atoms[i];
    if (a.explicit_h_set) continue;  // bracket atom: H count came from the text
    const auto& valences = default_valences(a.element);
    const int used = static_cast<int>(std::ceil(order_sum[i] - 1e-9));
    a.implicit_h = 0;
    for (int val : valences) {
      if (val >= used) {
        a.implicit_h = val - used;
        break;
      }
    }
  }
}

inline void mark_ring_membership(MolecularGraph& g) {
  // An edge is a ring edge iff removing it keeps its endpoints connected;
  // equivalently, iff it is not a bridge. Small graphs: test per edge by BFS.
  const auto adj = g.adjacency();
  auto connected_without = [&](int skip_bond, int from, int to) {
    std::vector<char> seen(g.atoms.size(), 0);
    std::vector<int> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      if (u == to) return true;
      for (std::size_t bi = 0; bi < g.bonds.size(); ++bi) {
        if (static_cast<int>(bi) == skip_bond) continue;
        const auto& b = g.bonds[bi];
        int v = -1;
        if (b.a == u) v = b.b;
        else if (b.b == u) v = b.a;
        else continue;
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return false;
  };
  for (auto& a : g.atoms) a.in_ring = false;
  for (std::size_t bi = 0; bi < g.bonds.size(); ++bi) {
    const auto& b = g.bonds[bi];
    if (connected_without(static_cast<int>(bi), b.a, b.b)) {
      g.atoms[b.a].in_ring = true;
      g.atoms[b.b].in_ring = true;
    }
  }
}

}  // namespace detail

// Organic-subset SMILES: B C N O P S F Cl Br I, aromatic b c n o p s,
// bracket atoms with charge and explicit H, bonds - = # :, branches,
// ring closures 1-9 and %nn. Stereo markers / \ @ are skipped with a
// warning. Anything else raises UnsupportedToken at its byte offset.
inline MolecularGraph parse_smiles(std::string_view text, std::vector<std::string>* warnings = nullptr) {
  if (text.empty()) throw UnsupportedToken("empty input", 0);
  MolecularGraph g;
  g.source_smiles = std::string(text);

  struct RingSlot {
    int atom;
    std::optional<BondOrder> order;
    std::size_t offset;
  };
  std::map<int, RingSlot> open_rings;
  std::vector<int> branch_stack;
  int prev_atom = -1;
  std::optional<BondOrder> pending_bond;
  std::size_t pending_bond_offset = 0;

  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };

  auto add_bond = [&](int a, int b, BondOrder order, std::size_t off) {
    if (a == b) throw UnbalancedRingClosure("ring closure makes a self-loop", off);
    for (const auto& e : g.bonds) {
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a))
        throw UnbalancedRingClosure("duplicate bond between atoms", off);
    }
    if (order == BondOrder::Aromatic && (!g.atoms[a].aromatic || !g.atoms[b].aromatic))
      throw UnsupportedToken("aromatic bond between non-aromatic atoms", off);
    g.bonds.push_back({a, b, order});
  };

  auto connect_new_atom = [&](int atom_idx, std::size_t off) {
    if (prev_atom >= 0) {
      BondOrder order;
      if (pending_bond) {
        order = *pending_bond;
      } else {
        order = (g.atoms[prev_atom].aromatic && g.atoms[atom_idx].aromatic) ? BondOrder::Aromatic
                                                                            : BondOrder::Single;
      }
      add_bond(prev_atom, atom_idx, order, off);
    } else if (pending_bond) {
      throw UnsupportedToken("bond symbol before any atom", pending_bond_offset);
    }
    pending_bond.reset();
    prev_atom = atom_idx;
  };

  auto handle_ring_digit = [&](int digit, std::size_t off) {
    if (prev_atom < 0) throw UnsupportedToken("ring closure before any atom", off);
    auto it = open_rings.find(digit);
    if (it == open_rings.end()) {
      open_rings[digit] = RingSlot{prev_atom, pending_bond, off};
      pending_bond.reset();
      return;
    }
    RingSlot slot = it->second;
    open_rings.erase(it);
    std::optional<BondOrder> order = pending_bond;
    if (slot.order) {
      if (order && *order != *slot.order)
        throw UnsupportedToken("conflicting bond orders on ring closure", off);
      order = slot.order;
    }
    BondOrder final_order;
    if (order) {
      final_order = *order;
    } else {
      final_order = (g.atoms[slot.atom].aromatic && g.atoms[prev_atom].aromatic)
                        ? BondOrder::Aromatic
                        : BondOrder::Single;
    }
    add_bond(slot.atom, prev_atom, final_order, off);
    pending_bond.reset();
  };

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (c == '(') {
      if (prev_atom < 0) throw UnbalancedParenthesis("branch before any atom", i);
      branch_stack.push_back(prev_atom);
      ++i;
    } else if (c == ')') {
      if (branch_stack.empty()) throw UnbalancedParenthesis("unmatched ')'", i);
      if (pending_bond) throw UnsupportedToken("dangling bond before ')'", pending_bond_offset);
      prev_atom = branch_stack.back();
      branch_stack.pop_back();
      ++i;
    } else if (c == '-' || c == '=' || c == '#' || c == ':') {
      if (pending_bond) throw UnsupportedToken("two bond symbols in a row", i);
      pending_bond = c == '-'   ? BondOrder::Single
                     : c == '=' ? BondOrder::Double
                     : c == '#' ? BondOrder::Triple
                                : BondOrder::Aromatic;
      pending_bond_offset = i;
      ++i;
    } else if (c == '/' || c == '\\') {
      warn("stereo bond marker ignored at byte " + std::to_string(i));
      ++i;
    } else if (c >= '1' && c <= '9') {
      handle_ring_digit(c - '0', i);
      ++i;
    } else if (c == '%') {
      if (i + 2 >= n || !std::isdigit(static_cast<unsigned char>(text[i + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text[i + 2])))
        throw UnsupportedToken("'%' needs two digits", i);
      handle_ring_digit((text[i + 1] - '0') * 10 + (text[i + 2] - '0'), i);
      i += 3;
    } else if (c == '[') {
      const std::size_t open = i;
      ++i;
      AtomRecord atom;
      atom.explicit_h_set = true;
      // element symbol (one upper + optional lower, or aromatic lower)
      if (i < n && std::isupper(static_cast<unsigned char>(text[i]))) {
        std::string sym(1, text[i]);
        if (i + 1 < n && std::islower(static_cast<unsigned char>(text[i + 1])) &&
            detail::organic_element(sym + text[i + 1])) {
          sym += text[i + 1];
          ++i;
        }
        if (!detail::organic_element(sym)) throw UnsupportedToken("element '" + sym + "' outside the subset", open + 1);
        atom.element = sym;
        ++i;
      } else if (i < n && std::islower(static_cast<unsigned char>(text[i]))) {
        const char lc = text[i];
        std::string sym(1, static_cast<char>(std::toupper(static_cast<unsigned char>(lc))));
        if (lc != 'b' && lc != 'c' && lc != 'n' && lc != 'o' && lc != 'p' && lc != 's')
          throw UnsupportedToken(std::string("aromatic symbol '") + lc + "' outside the subset", i);
        atom.element = sym;
        atom.aromatic = true;
        ++i;
      } else {
        throw UnsupportedToken("expected element symbol after '['", i < n ? i : open);
      }
      // chirality: ignored with a warning
      while (i < n && text[i] == '@') {
        warn("chirality marker ignored at byte " + std::to_string(i));
        ++i;
      }
      // explicit hydrogens
      if (i < n && text[i] == 'H') {
        ++i;
        int h = 1;
        if (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
          h = text[i] - '0';
          ++i;
        }
        atom.implicit_h = h;
      }
      // charge
      if (i < n && (text[i] == '+' || text[i] == '-')) {
        const char sign_char = text[i];
        const int sign = sign_char == '+' ? 1 : -1;
        int magnitude = 1;
        ++i;
        if (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
          magnitude = text[i] - '0';
          ++i;
        } else {
          while (i < n && text[i] == sign_char) {
            ++magnitude;
            ++i;
          }
        }
        atom.formal_charge = sign * magnitude;
      }
      if (i >= n || text[i] != ']') throw UnsupportedToken("expected ']'", i < n ? i : open);
      ++i;
      g.atoms.push_back(atom);
      connect_new_atom(static_cast<int>(g.atoms.size()) - 1, open);
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      std::string sym(1, c);
      std::size_t adv = 1;
      if (i + 1 < n && std::islower(static_cast<unsigned char>(text[i + 1])) &&
          detail::organic_element(sym + text[i + 1])) {
        sym += text[i + 1];
        adv = 2;
      }
      if (!detail::organic_element(sym)) throw UnsupportedToken("element '" + sym + "' outside the subset", i);
      AtomRecord atom;
      atom.element = sym;
      g.atoms.push_back(atom);
      connect_new_atom(static_cast<int>(g.atoms.size()) - 1, i);
      i += adv;
    } else if (std::islower(static_cast<unsigned char>(c))) {
      if (c != 'b' && c != 'c' && c != 'n' && c != 'o' && c != 'p' && c != 's')
        throw UnsupportedToken(std::string("aromatic symbol '") + c + "' outside the subset", i);
      AtomRecord atom;
      atom.element = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      atom.aromatic = true;
      g.atoms.push_back(atom);
      connect_new_atom(static_cast<int>(g.atoms.size()) - 1, i);
      ++i;
    } else {
      throw UnsupportedToken(std::string("unexpected character '") + c + "'", i);
    }
  }

  if (!branch_stack.empty()) throw UnbalancedParenthesis("unclosed '('", n);
  if (!open_rings.empty()) {
    const auto& slot = open_rings.begin()->second;
    throw UnbalancedRingClosure("ring closure digit never paired", slot.offset);
  }
  if (pending_bond) throw UnsupportedToken("dangling bond at end of input", pending_bond_offset);

  detail::mark_ring_membership(g);
  detail::assign_implicit_hydrogens(g);
  return g;
}

// Ring systems plus linkers: iteratively strip degree-1 non-ring atoms.
// Acyclic input collapses to the empty graph.
inline MolecularGraph murcko_scaffold(const MolecularGraph& g) {
  std::vector<char> alive(g.atoms.size(), 1);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> deg(g.atoms.size(), 0);
    for (const auto& b : g.bonds) {
      if (alive[b.a] && alive[b.b]) {
        ++deg[b.a];
        ++deg[b.b];
      }
    }
    for (std::size_t i = 0; i < g.atoms.size(); ++i) {
      if (alive[i] && !g.atoms[i].in_ring && deg[i] <= 1) {
        alive[i] = 0;
        changed = true;
      }
    }
  }
  MolecularGraph out;
  out.source_smiles = g.source_smiles;
  std::vector<int> remap(g.atoms.size(), -1);
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    if (alive[i]) {
      remap[i] = static_cast<int>(out.atoms.size());
      out.atoms.push_back(g.atoms[i]);
      out.atoms.back().explicit_h_set = false;
    }
  }
  for (const auto& b : g.bonds) {
    if (alive[b.a] && alive[b.b]) out.bonds.push_back({remap[b.a], remap[b.b], b.order});
  }
  detail::mark_ring_membership(out);
  detail::assign_implicit_hydrogens(out);
  return out;
}

inline double molecular_weight(const MolecularGraph& g) {
  double w = 0.0;
  for (const auto& a : g.atoms) w += detail::atomic_mass(a.element) + a.implicit_h * detail::atomic_mass("H");
  return w;
}

namespace detail {

inline int component_count(const MolecularGraph& g) {
  if (g.atoms.empty()) return 0;
  const auto adj = g.adjacency();
  std::vector<char> seen(g.atoms.size(), 0);
  int comps = 0;
  for (std::size_t s = 0; s < g.atoms.size(); ++s) {
    if (seen[s]) continue;
    ++comps;
    std::vector<int> stack{static_cast<int>(s)};
    seen[s] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
  }
  return comps;
}

}  // namespace detail

inline StructuralDescriptors structural_descriptors(const MolecularGraph& g) {
  StructuralDescriptors d;
  d.heavy_atom_count = static_cast<int>(g.atoms.size());
  if (g.atoms.empty()) return d;  // all-zero convention for the empty graph
  d.ring_count = static_cast<int>(g.bonds.size()) - static_cast<int>(g.atoms.size()) +
                 detail::component_count(g);
  // cycle rank of the aromatic-bond subgraph
  {
    MolecularGraph arom;
    std::vector<int> remap(g.atoms.size(), -1);
    for (const auto& b : g.bonds) {
      if (b.order != BondOrder::Aromatic) continue;
      for (int endpoint : {b.a, b.b}) {
        if (remap[endpoint] < 0) {
          remap[endpoint] = static_cast<int>(arom.atoms.size());
          arom.atoms.push_back(g.atoms[endpoint]);
        }
      }
      arom.bonds.push_back({remap[b.a], remap[b.b], b.order});
    }
    if (!arom.atoms.empty())
      d.aromatic_ring_count = static_cast<int>(arom.bonds.size()) -
                              static_cast<int>(arom.atoms.size()) + detail::component_count(arom);
  }
  int hetero = 0;
  for (const auto& a : g.atoms)
    if (a.element != "C") ++hetero;
  d.heteroatom_fraction = static_cast<double>(hetero) / static_cast<double>(g.atoms.size());
  d.molecular_weight = molecular_weight(g);
  return d;
}

// Feature layout per atom: element one-hot (10) | degree one-hot (0..5)
// | aromatic | formal charge | implicit H count, zero-padded to feature_dim.
inline constexpr int kElementClasses = 10;
inline constexpr int kDegreeClasses = 6;
inline constexpr int kMinFeatureDim = kElementClasses + kDegreeClasses + 3;

inline int element_class(std::string_view sym) {
  static const std::array<std::string_view, kElementClasses> kOrder = {
      "B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"};
  for (int k = 0; k < kElementClasses; ++k)
    if (kOrder[k] == sym) return k;
  throw Error("element outside the feature table: " + std::string(sym));
}

inline Tensor atom_features(const MolecularGraph& g, int feature_dim) {
  if (feature_dim < kMinFeatureDim)
    throw FeatureDimTooSmall("feature_dim " + std::to_string(feature_dim) + " < minimum " +
                             std::to_string(kMinFeatureDim));
  Tensor f({static_cast<std::int64_t>(g.atoms.size()), feature_dim});
  std::vector<int> deg(g.atoms.size(), 0);
  for (const auto& b : g.bonds) {
    ++deg[b.a];
    ++deg[b.b];
  }
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    const auto& a = g.atoms[i];
    const std::int64_t row = static_cast<std::int64_t>(i);
    f.at(row, element_class(a.element)) = 1.0;
    f.at(row, kElementClasses + std::min(deg[i], kDegreeClasses - 1)) = 1.0;
    f.at(row, kElementClasses + kDegreeClasses + 0) = a.aromatic ? 1.0 : 0.0;
    f.at(row, kElementClasses + kDegreeClasses + 1) = static_cast<double>(a.formal_charge);
    f.at(row, kElementClasses + kDegreeClasses + 2) = static_cast<double>(a.implicit_h);
  }
  return f;
}

// Canonical grouping key: Morgan-style refinement of atom classes, then
// the lexicographically smallest DFS string over candidate start atoms.
// Used for scaffold-group equality only, never for interchange.
inline std::string canonical_key(const MolecularGraph& g) {
  if (g.atoms.empty()) return "";
  const std::size_t n = g.atoms.size();
  const auto adj = g.adjacency();

  auto bond_label = [&](int a, int b) -> int {
    for (const auto& e : g.bonds)
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return static_cast<int>(e.order);
    return 0;
  };

  std::vector<std::uint64_t> cls(n);
  for (std::size_t i = 0; i < n; ++i) {
    cls[i] = fnv1a64(g.atoms[i].element) ^ (g.atoms[i].aromatic ? 0x9e37ull : 0) ^
             (static_cast<std::uint64_t>(g.atoms[i].formal_charge + 8) << 8) ^
             (static_cast<std::uint64_t>(adj[i].size()) << 16);
  }
  for (std::size_t round = 0; round < n; ++round) {
    std::vector<std::uint64_t> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::uint64_t> nb;
      for (int j : adj[i])
        nb.push_back(cls[j] * 31 + static_cast<std::uint64_t>(bond_label(static_cast<int>(i), j)));
      std::sort(nb.begin(), nb.end());
      std::uint64_t h = cls[i] * 1099511628211ull;
      for (auto x : nb) h = (h ^ x) * 1099511628211ull;
      next[i] = h;
    }
    if (next == cls) break;
    cls = next;
  }

  auto dfs_string = [&](int start) {
    std::string out;
    std::vector<char> seen(n, 0);
    std::vector<int> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      out += g.atoms[u].element;
      out += g.atoms[u].aromatic ? 'a' : '.';
      char buf[24];
      std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(cls[u]));
      out += buf;
      std::vector<int> nbrs;
      for (int v : adj[u])
        if (!seen[v]) nbrs.push_back(v);
      std::sort(nbrs.begin(), nbrs.end(), [&](int x, int y) {
        if (cls[x] != cls[y]) return cls[x] < cls[y];
        return x < y;
      });
      for (auto it = nbrs.rbegin(); it != nbrs.rend(); ++it) {
        seen[*it] = 1;
        stack.push_back(*it);
      }
    }
    return out;
  };

  // per-component smallest DFS string, components sorted at the end
  std::vector<std::string> parts;
  std::vector<char> covered(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (covered[i]) continue;
    std::vector<int> comp;
    std::vector<int> stack{static_cast<int>(i)};
    std::vector<char> seen(n, 0);
    seen[i] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      comp.push_back(u);
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
    }
    std::uint64_t local_min = cls[comp[0]];
    for (int u : comp) local_min = std::min(local_min, cls[u]);
    std::string comp_best;
    for (int u : comp) {
      covered[u] = 1;
      if (cls[u] != local_min) continue;
      std::string s = dfs_string(u);
      if (comp_best.empty() || s < comp_best) comp_best = std::move(s);
    }
    parts.push_back(std::move(comp_best));
  }
  std::sort(parts.begin(), parts.end());
  std::string best;
  for (const auto& p : parts) {
    best += p;
    best += '|';
  }
  return best;
}

inline std::string scaffold_key(const MolecularGraph& g) { return canonical_key(murcko_scaffold(g)); }

}  // namespace synkit::chem
