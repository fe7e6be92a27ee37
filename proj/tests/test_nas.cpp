//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cmath>
#include <vector>

#include "synkit/nas.hpp"

using namespace synkit;
using namespace synkit::nas;

namespace {

// plain-loop y = x W + b over a row matrix; oracle-side linear algebra
std::vector<std::vector<double>> loop_linear(const std::vector<std::vector<double>>& x, const Tensor& w,
                                             const Tensor& b) {
  std::vector<std::vector<double>> y(x.size(), std::vector<double>(static_cast<std::size_t>(w.cols()), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::int64_t j = 0; j < w.cols(); ++j) {
      double s = b.numel() ? b.at(j) : 0.0;
      for (std::int64_t k = 0; k < w.rows(); ++k) s += x[i][static_cast<std::size_t>(k)] * w.at(k, j);
      y[i][static_cast<std::size_t>(j)] = s;
    }
  return y;
}

std::vector<std::vector<double>> rows_of(const Tensor& t) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(t.rows()));
  for (std::int64_t i = 0; i < t.rows(); ++i)
    for (std::int64_t j = 0; j < t.cols(); ++j) out[static_cast<std::size_t>(i)].push_back(t.at(i, j));
  return out;
}

RoutingLayerSpec tiny_layer(const std::string& prefix, std::vector<OpKind> kinds, std::int64_t in_w,
                            std::int64_t out_w, std::int64_t d_op = 8) {
  RoutingLayerSpec s;
  s.prefix = prefix;
  s.kinds = std::move(kinds);
  s.in_width = in_w;
  s.out_width = out_w;
  s.d_op = d_op;
  return s;
}

}  // namespace

TEST_SUITE("nas") {

TEST_CASE("routing weights: identical descriptors give uniform alpha") {
  ParamStore store;
  Rng rng(1);
  auto spec = tiny_layer("nas.l0", {OpKind::GCNmol, OpKind::GINmol, OpKind::MLPmol}, 4, 4);
  init_routing_layer(store, rng, spec);
  store.create("route.w", random_normal(rng, {6, 8}));
  store.create("route.b", Tensor::zeros({8}));
  Tensor same = random_normal(rng, {8});
  for (std::size_t i = 0; i < 3; ++i) store.value(spec.descriptor_name(i)) = same;

  Graph g;
  Var h = g.constant(random_normal(rng, {6}));
  Var alpha = routing_weights(g, store, spec, h, "route");
  for (int i = 0; i < 3; ++i) CHECK(g.val(alpha).at(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("routing weights: softmax arithmetic on known dot products") {
  ParamStore store;
  Rng rng(2);
  auto spec = tiny_layer("nas.l0", {OpKind::MLPmol, OpKind::MLPmol, OpKind::MLPmol}, 3, 3, 4);
  init_routing_layer(store, rng, spec);
  // identity projection; descriptors chosen so the dot products are (ln 2, 0, 0)
  Tensor eye({4, 4});
  for (int i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
  store.create("route.w", eye);
  store.create("route.b", Tensor::zeros({4}));
  store.value(spec.descriptor_name(0)) = Tensor::from_vector({std::log(2.0), 0, 0, 0});
  store.value(spec.descriptor_name(1)) = Tensor::from_vector({0, 1, 0, 0});
  store.value(spec.descriptor_name(2)) = Tensor::from_vector({0, 0, 1, 0});

  Graph g;
  Var h = g.constant(Tensor::from_vector({1.0, 0.0, 0.0, 0.0}));
  Var alpha = routing_weights(g, store, spec, h, "route");
  CHECK(g.val(alpha).at(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.val(alpha).at(1) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(g.val(alpha).at(2) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("routing weights: six default prototypes, simplex invariant") {
  ParamStore store;
  Rng rng(3);
  auto spec = tiny_layer("nas.l0", std::vector<OpKind>(kAllOpKinds.begin(), kAllOpKinds.end()), 4, 4);
  init_routing_layer(store, rng, spec);
  store.create("route.w", random_normal(rng, {5, 8}));
  store.create("route.b", Tensor::zeros({8}));
  for (int trial = 0; trial < 50; ++trial) {
    Graph g;
    Var alpha = routing_weights(g, store, spec, g.constant(random_normal(rng, {5}, 2.0)), "route");
    const Tensor& a = g.val(alpha);
    REQUIRE(a.numel() == 6);
    double s = 0.0;
    for (double v : a.v) {
      CHECK(v > 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("degenerate descriptor is rejected") {
  ParamStore store;
  Rng rng(4);
  auto spec = tiny_layer("nas.l0", {OpKind::MLPmol, OpKind::GCNmol}, 3, 3);
  init_routing_layer(store, rng, spec);
  store.create("route.w", random_normal(rng, {3, 8}));
  store.create("route.b", Tensor::zeros({8}));
  store.value(spec.descriptor_name(1)) = Tensor::zeros({8});
  Graph g;
  CHECK_THROWS_AS((void)routing_weights(g, store, spec, g.constant(random_normal(rng, {3})), "route"),
                  DegenerateDescriptor);
  CHECK_THROWS_AS((void)separation_loss(g, store, {spec}), DegenerateDescriptor);
}

TEST_CASE("mixed layer: one-hot routing reproduces the single operator bit-exactly") {
  ParamStore store;
  Rng rng(5);
  auto spec = tiny_layer("nas.l0", {OpKind::GCNmol, OpKind::MLPmol, OpKind::GINmol}, 4, 4);
  init_routing_layer(store, rng, spec);
  auto topo = topology_of(chem::parse_smiles("CCO"));
  Tensor x0 = random_normal(rng, {3, 4});

  Graph g;
  Var x = g.constant(x0);
  Var alpha = g.constant(Tensor::from_vector({0.0, 1.0, 0.0}));
  Var mixed = mixed_layer(g, store, spec, x, alpha, topo);
  Var solo = message_op(g, store, spec.op_prefix(1), OpKind::MLPmol, x, spec.bond_table(), topo);
  for (std::size_t i = 0; i < g.val(mixed).v.size(); ++i)
    CHECK(g.val(mixed).v[i] == g.val(solo).v[i]);  // bit-exact
}

TEST_CASE("mixed layer: two identical operators under uniform alpha equal either alone") {
  ParamStore store;
  Rng rng(6);
  auto spec = tiny_layer("nas.l0", {OpKind::MLPmol, OpKind::MLPmol}, 4, 4);
  init_routing_layer(store, rng, spec);
  store.value(spec.op_prefix(1) + ".mlp.w") = store.value(spec.op_prefix(0) + ".mlp.w");
  store.value(spec.op_prefix(1) + ".mlp.b") = store.value(spec.op_prefix(0) + ".mlp.b");
  auto topo = topology_of(chem::parse_smiles("CCO"));
  Graph g;
  Var x = g.constant(random_normal(rng, {3, 4}));
  Var mixed = mixed_layer(g, store, spec, x, g.constant(Tensor::from_vector({0.5, 0.5})), topo);
  Var solo = message_op(g, store, spec.op_prefix(0), OpKind::MLPmol, x, spec.bond_table(), topo);
  for (std::size_t i = 0; i < g.val(mixed).v.size(); ++i)
    CHECK(g.val(mixed).v[i] == doctest::Approx(g.val(solo).v[i]).epsilon(1e-15));
}

TEST_CASE("mixed layer decomposes into the weighted operator sum") {
  ParamStore store;
  Rng rng(7);
  auto spec = tiny_layer("nas.l0", {OpKind::GCNmol, OpKind::SAGEmol, OpKind::Graphmol}, 5, 5);
  init_routing_layer(store, rng, spec);
  auto topo = topology_of(chem::parse_smiles("c1ccccc1C(=O)N"));
  Graph g;
  Var x = g.constant(random_normal(rng, {9, 5}));
  Tensor a = Tensor::from_vector({0.2, 0.5, 0.3});
  Var mixed = mixed_layer(g, store, spec, x, g.constant(a), topo);
  std::vector<Tensor> solo;
  for (std::size_t i = 0; i < 3; ++i)
    solo.push_back(g.val(message_op(g, store, spec.op_prefix(i), spec.kinds[i], x, spec.bond_table(), topo)));
  for (std::size_t i = 0; i < g.val(mixed).v.size(); ++i) {
    const double expect = a.at(0) * solo[0].v[i] + a.at(1) * solo[1].v[i] + a.at(2) * solo[2].v[i];
    CHECK(g.val(mixed).v[i] == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("GCNmol matches the hand-computed aggregation on the CCO path") {
  ParamStore store;
  Rng rng(8);
  init_message_op(store, rng, "op", OpKind::GCNmol, 3, 2);
  store.create("bond", random_normal(rng, {4, 3}, 0.2));
  auto topo = topology_of(chem::parse_smiles("CCO"));
  Tensor x0 = random_normal(rng, {3, 3});

  Graph g;
  Var h = message_op(g, store, "op", OpKind::GCNmol, g.constant(x0), "bond", topo);

  // degrees 1,2,1; all bonds single (bond kind 0)
  const Tensor& bond = store.value("bond");
  const double d0 = 1.0 / std::sqrt(2.0), d1 = 1.0 / std::sqrt(3.0), d2 = 1.0 / std::sqrt(2.0);
  auto msg = [&](int j, int) {
    std::vector<double> m(3);
    for (int c = 0; c < 3; ++c) m[static_cast<std::size_t>(c)] = x0.at(j, c) + bond.at(0, c);
    return m;
  };
  std::vector<std::vector<double>> agg(3, std::vector<double>(3, 0.0));
  const double n01 = d0 * d1, n12 = d1 * d2;
  for (int c = 0; c < 3; ++c) {
    agg[0][static_cast<std::size_t>(c)] = n01 * msg(1, 0)[static_cast<std::size_t>(c)] + d0 * d0 * x0.at(0, c);
    agg[1][static_cast<std::size_t>(c)] = n01 * msg(0, 1)[static_cast<std::size_t>(c)] +
                                          n12 * msg(2, 1)[static_cast<std::size_t>(c)] + d1 * d1 * x0.at(1, c);
    agg[2][static_cast<std::size_t>(c)] = n12 * msg(1, 2)[static_cast<std::size_t>(c)] + d2 * d2 * x0.at(2, c);
  }
  auto expect = loop_linear(agg, store.value("op.gcn.w"), store.value("op.gcn.b"));
  auto got = rows_of(g.val(h));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(got[i][j] == doctest::Approx(expect[i][j]).epsilon(1e-12));
}

TEST_CASE("GINmol with eps 0 on an isolated atom is the bare MLP") {
  ParamStore store;
  Rng rng(9);
  init_message_op(store, rng, "op", OpKind::GINmol, 3, 3);
  store.create("bond", random_normal(rng, {4, 3}));
  auto topo = topology_of(chem::parse_smiles("C"));
  Tensor x0 = random_normal(rng, {1, 3});
  Graph g;
  Var h = message_op(g, store, "op", OpKind::GINmol, g.constant(x0), "bond", topo);

  auto hidden = loop_linear(rows_of(x0), store.value("op.gin.w1"), store.value("op.gin.b1"));
  for (auto& row : hidden)
    for (auto& v : row) v = std::max(v, 0.0);
  auto expect = loop_linear(hidden, store.value("op.gin.w2"), store.value("op.gin.b2"));
  for (std::size_t j = 0; j < 3; ++j) CHECK(g.val(h).at(0, static_cast<std::int64_t>(j)) ==
                                            doctest::Approx(expect[0][j]).epsilon(1e-12));
}

TEST_CASE("GATmol: single neighbour gets attention weight one") {
  ParamStore store;
  Rng rng(10);
  init_message_op(store, rng, "op", OpKind::GATmol, 3, 2);
  store.create("bond", random_normal(rng, {4, 3}, 0.2));
  auto topo = topology_of(chem::parse_smiles("CC"));
  Tensor x0 = random_normal(rng, {2, 3});
  Graph g;
  Var h = message_op(g, store, "op", OpKind::GATmol, g.constant(x0), "bond", topo);

  const Tensor& bond = store.value("bond");
  std::vector<std::vector<double>> pre(2, std::vector<double>(3));
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    for (int c = 0; c < 3; ++c) pre[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] =
        std::max(x0.at(j, c) + bond.at(0, c), 0.0);  // alpha = 1 for a single key
  }
  auto expect = loop_linear(pre, store.value("op.gat.w"), store.value("op.gat.b"));
  auto got = rows_of(g.val(h));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(got[i][j] == doctest::Approx(expect[i][j]).epsilon(1e-12));
}

TEST_CASE("GATmol: explicit softmax oracle on a branched molecule") {
  ParamStore store;
  Rng rng(11);
  init_message_op(store, rng, "op", OpKind::GATmol, 4, 3);
  store.create("bond", random_normal(rng, {4, 4}, 0.3));
  auto mol = chem::parse_smiles("CC(N)O");
  auto topo = topology_of(mol);
  Tensor x0 = random_normal(rng, {4, 4});
  Graph g;
  Var h = message_op(g, store, "op", OpKind::GATmol, g.constant(x0), "bond", topo);

  const Tensor& bond = store.value("bond");
  const Tensor& a_src = store.value("op.gat.a_src");
  const Tensor& a_dst = store.value("op.gat.a_dst");
  auto adj = mol.adjacency();
  std::vector<std::vector<double>> agg(4, std::vector<double>(4, 0.0));
  for (int i = 0; i < 4; ++i) {
    std::vector<double> scores;
    std::vector<std::vector<double>> vals;
    for (int j : adj[static_cast<std::size_t>(i)]) {
      std::vector<double> v(4);
      for (int c = 0; c < 4; ++c) v[static_cast<std::size_t>(c)] = std::max(x0.at(j, c) + bond.at(0, c), 0.0);
      double s = 0.0;
      for (int c = 0; c < 4; ++c) s += a_src.at(c) * x0.at(i, c) + a_dst.at(c) * v[static_cast<std::size_t>(c)];
      scores.push_back(s > 0 ? s : 0.2 * s);
      vals.push_back(v);
    }
    if (scores.empty()) continue;
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    double denom = 0.0;
    for (double s : scores) denom += std::exp(s - mx);
    for (std::size_t k = 0; k < scores.size(); ++k) {
      const double alpha = std::exp(scores[k] - mx) / denom;
      for (int c = 0; c < 4; ++c) agg[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] +=
          alpha * vals[k][static_cast<std::size_t>(c)];
    }
  }
  auto expect = loop_linear(agg, store.value("op.gat.w"), store.value("op.gat.b"));
  auto got = rows_of(g.val(h));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(got[i][j] == doctest::Approx(expect[i][j]).epsilon(1e-10));
}

TEST_CASE("operators are permutation-equivariant over atoms") {
  Rng rng(12);
  auto mol = chem::parse_smiles("CC(N)C(=O)O");
  const int n = static_cast<int>(mol.atoms.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = (i + 3) % n;  // relabeling
  chem::MolecularGraph permuted;
  permuted.atoms.resize(mol.atoms.size());
  for (int i = 0; i < n; ++i) permuted.atoms[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
      mol.atoms[static_cast<std::size_t>(i)];
  for (const auto& b : mol.bonds)
    permuted.bonds.push_back({perm[static_cast<std::size_t>(b.a)], perm[static_cast<std::size_t>(b.b)], b.order});

  Tensor x0 = random_normal(rng, {n, 4});
  Tensor x0p({n, 4});
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 4; ++c) x0p.at(perm[static_cast<std::size_t>(i)], c) = x0.at(i, c);

  for (OpKind kind : kAllOpKinds) {
    ParamStore store;
    Rng r2(100);
    init_message_op(store, r2, "op", kind, 4, 4);
    store.create("bond", random_normal(r2, {4, 4}, 0.2));
    Graph g;
    Var h = message_op(g, store, "op", kind, g.constant(x0), "bond", topology_of(mol));
    Var hp = message_op(g, store, "op", kind, g.constant(x0p), "bond", topology_of(permuted));
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 4; ++c)
        CHECK(g.val(hp).at(perm[static_cast<std::size_t>(i)], c) ==
              doctest::Approx(g.val(h).at(i, c)).epsilon(1e-9));
  }
}

TEST_CASE("separation loss landmarks") {
  ParamStore store;
  Rng rng(13);
  auto spec = tiny_layer("nas.l0", {OpKind::MLPmol, OpKind::GCNmol}, 3, 3, 4);
  init_routing_layer(store, rng, spec);

  Graph g;
  store.value(spec.descriptor_name(0)) = Tensor::from_vector({1, 0, 0, 0});
  store.value(spec.descriptor_name(1)) = Tensor::from_vector({0, 2, 0, 0});
  CHECK(g.scalar_value(separation_loss(g, store, {spec})) == doctest::Approx(0.0));

  store.value(spec.descriptor_name(1)) = Tensor::from_vector({3, 0, 0, 0});
  CHECK(g.scalar_value(separation_loss(g, store, {spec})) == doctest::Approx(1.0).epsilon(1e-12));

  const double c = std::cos(0.25 * 3.14159265358979323846);
  const double s = std::sin(0.25 * 3.14159265358979323846);
  store.value(spec.descriptor_name(1)) = Tensor::from_vector({c, s, 0, 0});
  CHECK(g.scalar_value(separation_loss(g, store, {spec})) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pair attention: zero-initialized FFN output keeps embeddings") {
  ParamStore store;
  Rng rng(14);
  init_pair_attention(store, rng, "pair", 8, 16);
  store.value("pair.ffn.w2") = Tensor::zeros({16, 8});
  store.value("pair.ffn.b2") = Tensor::zeros({8});
  Graph g;
  Tensor e1t = random_normal(rng, {8});
  Var e1 = g.constant(e1t);
  Var e2 = g.constant(random_normal(rng, {8}));
  auto [h1, h2] = pair_attend(g, store, "pair", e1, e2, 2);
  for (int i = 0; i < 8; ++i) CHECK(g.val(h1).at(i) == e1t.at(i));  // exact residual identity
  (void)h2;
}

TEST_CASE("pair attention: identical embeddings get identical contexts") {
  ParamStore store;
  Rng rng(15);
  init_pair_attention(store, rng, "pair", 8, 16);
  Graph g;
  Tensor e = random_normal(rng, {8});
  auto [h1, h2] = pair_attend(g, store, "pair", g.constant(e), g.constant(e), 2);
  for (int i = 0; i < 8; ++i) CHECK(g.val(h1).at(i) == doctest::Approx(g.val(h2).at(i)).epsilon(1e-15));
}

TEST_CASE("pair attention matches the explicit-loop oracle") {
  ParamStore store;
  Rng rng(16);
  init_pair_attention(store, rng, "pair", 6, 10);
  Graph g;
  Tensor e1 = random_normal(rng, {6}), e2 = random_normal(rng, {6});
  auto [h1, h2] = pair_attend(g, store, "pair", g.constant(e1), g.constant(e2), 2);
  (void)h2;

  auto matvec = [&](const Tensor& w, const std::vector<double>& x) {
    std::vector<double> y(static_cast<std::size_t>(w.cols()), 0.0);
    for (std::int64_t j = 0; j < w.cols(); ++j)
      for (std::int64_t k = 0; k < w.rows(); ++k) y[static_cast<std::size_t>(j)] += x[static_cast<std::size_t>(k)] * w.at(k, j);
    return y;
  };
  std::vector<double> e2v(e2.v.begin(), e2.v.end());
  std::vector<double> e1v(e1.v.begin(), e1.v.end());
  // single key per head: attention output is exactly W_o V
  auto v = matvec(store.value("pair.wv"), e2v);
  auto merged = matvec(store.value("pair.wo"), v);
  auto hid = matvec(store.value("pair.ffn.w1"), merged);
  for (std::size_t i = 0; i < hid.size(); ++i) hid[i] = std::tanh(hid[i] + store.value("pair.ffn.b1").at(static_cast<std::int64_t>(i)));
  auto ffn = matvec(store.value("pair.ffn.w2"), hid);
  for (int i = 0; i < 6; ++i)
    CHECK(g.val(h1).at(i) ==
          doctest::Approx(e1v[static_cast<std::size_t>(i)] + ffn[static_cast<std::size_t>(i)] +
                          store.value("pair.ffn.b2").at(i)).epsilon(1e-10));
}

TEST_CASE("full pipeline gradient: pair attention, routing, mixed layers") {
  ParamStore store;
  Rng rng(17);
  const std::int64_t in_w = 4, hid = 4, e_w = 6, d_op = 4;
  auto l0 = tiny_layer("nas.l0", {OpKind::GCNmol, OpKind::MLPmol}, in_w, hid, d_op);
  auto l1 = tiny_layer("nas.l1", {OpKind::GINmol, OpKind::SAGEmol}, hid, hid, d_op);
  init_routing_layer(store, rng, l0);
  init_routing_layer(store, rng, l1);
  init_pair_attention(store, rng, "pair", e_w, 8);
  store.create("route.w", random_normal(rng, {e_w, d_op}, 0.5));
  store.create("route.b", Tensor::zeros({d_op}));
  init_readout(store, rng, "read", hid, 3);

  auto mol = chem::parse_smiles("CCO");
  auto topo = topology_of(mol);
  Tensor x0 = random_normal(rng, {3, in_w});
  Tensor e1 = random_normal(rng, {e_w}), e2 = random_normal(rng, {e_w});

  double err = grad_check([&](Graph& g, ParamStore& s) {
    auto [h1, h2] = pair_attend(g, s, "pair", g.constant(e1), g.constant(e2), 2);
    Var x = g.constant(x0);
    for (const auto& spec : {l0, l1}) {
      Var alpha = routing_weights(g, s, spec, h1, "route");
      x = mixed_layer(g, s, spec, x, alpha, topo);
    }
    Var xd = readout(g, s, "read", x);
    Var both = g.add(g.sum(g.mul(xd, xd)), g.sum(h2));
    return both;
  }, store, 1e-4);
  CHECK(err < 1e-3);
}

}  // TEST_SUITE
