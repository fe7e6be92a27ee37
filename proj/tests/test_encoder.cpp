//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cmath>
#include <vector>

#include "synkit/encoder.hpp"

using namespace synkit;
using namespace synkit::encoder;

namespace {

EncoderConfig small_cfg() {
  EncoderConfig cfg;
  cfg.M = 2;
  cfg.D = 8;
  cfg.D_irr = 4;
  cfg.D_rel = 4;
  cfg.K_max = 2;
  cfg.D_t = 5;
  return cfg;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("zero-initialized final linear returns its bias") {
  ParamStore store;
  Rng rng(1);
  auto cfg = small_cfg();
  init_encoder(store, rng, cfg, 6);
  store.value("enc.pool.w") = Tensor::zeros({8, 8});
  Tensor bias = random_normal(rng, {8});
  store.value("enc.pool.b") = bias;
  Graph g;
  auto topo = nas::topology_of(chem::parse_smiles("C"));
  Var z = encode_graph(g, store, cfg, g.constant(random_normal(rng, {1, 6})), topo);
  for (int i = 0; i < 8; ++i) CHECK(g.val(z).at(i) == bias.at(i));
}

TEST_CASE("encoding is invariant to atom reindexing") {
  ParamStore store;
  Rng rng(2);
  auto cfg = small_cfg();
  init_encoder(store, rng, cfg, 6);
  auto mol = chem::parse_smiles("CCO");
  chem::MolecularGraph rev;
  rev.atoms = {mol.atoms[2], mol.atoms[1], mol.atoms[0]};
  for (const auto& b : mol.bonds) rev.bonds.push_back({2 - b.a, 2 - b.b, b.order});

  Tensor x = random_normal(rng, {3, 6});
  Tensor xr({3, 6});
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 6; ++c) xr.at(2 - i, c) = x.at(i, c);

  Graph g;
  Var z1 = encode_graph(g, store, cfg, g.constant(x), nas::topology_of(mol));
  Var z2 = encode_graph(g, store, cfg, g.constant(xr), nas::topology_of(rev));
  for (int i = 0; i < 8; ++i) CHECK(g.val(z1).at(i) == doctest::Approx(g.val(z2).at(i)).epsilon(1e-9));
}

TEST_CASE("first view matches a brute-force GCN reimplementation") {
  ParamStore store;
  Rng rng(3);
  auto cfg = small_cfg();
  init_encoder(store, rng, cfg, 4);
  auto mol = chem::parse_smiles("CC(N)O");
  auto topo = nas::topology_of(mol);
  Tensor x0 = random_normal(rng, {4, 4});

  Graph g;
  Var view = nas::message_op(g, store, "enc.view0", nas::OpKind::GCNmol, g.constant(x0), "enc.bond", topo);

  // explicit double loop over the adjacency
  auto adj = mol.adjacency();
  const Tensor& bond = store.value("enc.bond");
  const Tensor& w = store.value("enc.view0.gcn.w");
  const Tensor& b = store.value("enc.view0.gcn.b");
  std::vector<double> isq(4);
  for (int i = 0; i < 4; ++i) isq[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(adj[static_cast<std::size_t>(i)].size() + 1.0);
  for (int i = 0; i < 4; ++i) {
    std::vector<double> agg(4, 0.0);
    for (int j : adj[static_cast<std::size_t>(i)])
      for (int c = 0; c < 4; ++c)
        agg[static_cast<std::size_t>(c)] += isq[static_cast<std::size_t>(i)] * isq[static_cast<std::size_t>(j)] * (x0.at(j, c) + bond.at(0, c));
    for (int c = 0; c < 4; ++c) agg[static_cast<std::size_t>(c)] += isq[static_cast<std::size_t>(i)] * isq[static_cast<std::size_t>(i)] * x0.at(i, c);
    for (std::int64_t o = 0; o < 8; ++o) {
      double s = b.at(o);
      for (int c = 0; c < 4; ++c) s += agg[static_cast<std::size_t>(c)] * w.at(c, o);
      CHECK(g.val(view).at(i, o) == doctest::Approx(s).epsilon(1e-10));
    }
  }
}

TEST_CASE("disentangle: zero and identity blocks") {
  ParamStore store;
  Rng rng(4);
  auto cfg = small_cfg();
  init_encoder(store, rng, cfg, 6);
  Graph g;
  Tensor zg = random_normal(rng, {8});

  store.value("enc.w_irr") = Tensor::zeros({8, 4});
  auto d = disentangle(g, store, cfg, g.constant(zg));
  for (int i = 0; i < 4; ++i) CHECK(g.val(d.z_irr).at(i) == 0.0);

  EncoderConfig full;
  full.M = 1;
  full.D = 4;
  full.D_irr = 0;
  full.D_rel = 4;
  full.D_t = 5;
  ParamStore store2;
  Rng rng2(5);
  init_encoder(store2, rng2, full, 6);
  Tensor eye({4, 4});
  for (int i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
  store2.value("enc.w_rel") = eye;
  Tensor zg4 = random_normal(rng2, {4});
  auto d2 = disentangle(g, store2, full, g.constant(zg4));
  for (int i = 0; i < 4; ++i) CHECK(g.val(d2.z_rel).at(i) == zg4.at(i));
}

TEST_CASE("disentangle matches the hand matrix multiply") {
  ParamStore store;
  Rng rng(6);
  auto cfg = small_cfg();
  init_encoder(store, rng, cfg, 6);
  Tensor zg = random_normal(rng, {8});
  Graph g;
  auto d = disentangle(g, store, cfg, g.constant(zg));
  const Tensor& w = store.value("enc.w_irr");
  for (std::int64_t j = 0; j < 4; ++j) {
    double s = 0.0;
    for (std::int64_t k = 0; k < 8; ++k) s += zg.at(k) * w.at(k, j);
    CHECK(g.val(d.z_irr).at(j) == doctest::Approx(s).epsilon(1e-14));
  }
}

TEST_CASE("target attention: single key reduces to mapped value plus residual") {
  ParamStore store;
  Rng rng(7);
  auto cfg = small_cfg();
  init_encoder(store, rng, cfg, 6);
  Graph g;
  Tensor zrel = random_normal(rng, {4});
  Tensor t = random_normal(rng, {5});
  auto z1 = target_attend(g, store, cfg, g.constant(zrel), {t});
  REQUIRE(z1.size() == 1);

  // oracle: W_o(W_v t) + b_o + z_rel, independent of W_q
  const Tensor& wv = store.value("enc.attn.wv");
  const Tensor& wo = store.value("enc.attn.wo");
  const Tensor& bo = store.value("enc.attn.bo");
  std::vector<double> value(4, 0.0);
  for (std::int64_t j = 0; j < 4; ++j)
    for (std::int64_t k = 0; k < 5; ++k) value[static_cast<std::size_t>(j)] += t.at(k) * wv.at(k, j);
  for (std::int64_t j = 0; j < 4; ++j) {
    double s = bo.at(j) + zrel.at(j);
    for (std::int64_t k = 0; k < 4; ++k) s += value[static_cast<std::size_t>(k)] * wo.at(k, j);
    CHECK(g.val(z1[0]).at(j) == doctest::Approx(s).epsilon(1e-10));
  }

  // attention logits do not change the value (single-key softmax is 1)
  store.value("enc.attn.wq") = random_normal(rng, {4, 4}, 10.0);
  Graph g2;
  auto z2 = target_attend(g2, store, cfg, g2.constant(zrel), {t});
  for (std::int64_t j = 0; j < 4; ++j)
    CHECK(g2.val(z2[0]).at(j) == doctest::Approx(g.val(z1[0]).at(j)).epsilon(1e-12));
}

TEST_CASE("identical targets give identical representations") {
  ParamStore store;
  Rng rng(8);
  auto cfg = small_cfg();
  init_encoder(store, rng, cfg, 6);
  Graph g;
  Tensor t = random_normal(rng, {5});
  std::vector<double> logits;
  auto z = target_attend(g, store, cfg, g.constant(random_normal(rng, {4})), {t, t}, &logits);
  REQUIRE(z.size() == 2);
  REQUIRE(logits.size() == 2);
  CHECK(logits[0] == logits[1]);
  for (int j = 0; j < 4; ++j) CHECK(g.val(z[0]).at(j) == g.val(z[1]).at(j));
}

TEST_CASE("target_attend with no targets raises NoTargets") {
  ParamStore store;
  Rng rng(9);
  auto cfg = small_cfg();
  init_encoder(store, rng, cfg, 6);
  Graph g;
  CHECK_THROWS_AS((void)target_attend(g, store, cfg, g.constant(Tensor::zeros({4})), {}), NoTargets);
}

TEST_CASE("assemble_embedding pads with the learned null slot") {
  ParamStore store;
  Rng rng(10);
  EncoderConfig cfg;
  cfg.M = 1;
  cfg.D = 6;
  cfg.D_irr = 4;
  cfg.D_rel = 2;
  cfg.K_max = 3;
  cfg.D_t = 5;
  init_encoder(store, rng, cfg, 6);
  CHECK(cfg.embedding_width() == 10);  // 4 + 3*2

  Graph g;
  Var z_irr = g.constant(random_normal(rng, {4}));
  Var z1 = g.constant(random_normal(rng, {2}));
  Var z2 = g.constant(random_normal(rng, {2}));
  Var z3 = g.constant(random_normal(rng, {2}));

  Var full = assemble_embedding(g, store, cfg, z_irr, {z1, z2, z3});
  CHECK(g.val(full).numel() == 10);
  CHECK(g.val(full).at(4) == g.val(z1).at(0));  // no padding when K == K_max

  Var none = assemble_embedding(g, store, cfg, z_irr, {});
  const Tensor& null_slot = store.value("enc.null_slot");
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 2; ++j) CHECK(g.val(none).at(4 + 2 * k + j) == null_slot.at(j));

  Var one = assemble_embedding(g, store, cfg, z_irr, {z1});
  CHECK(g.val(one).numel() == 10);
  CHECK(g.val(one).at(6) == null_slot.at(0));
}

TEST_CASE("decorrelation loss landmarks") {
  Graph g;
  Rng rng(11);

  // K = 1 is zero by convention
  std::vector<std::vector<Var>> k1;
  for (int i = 0; i < 4; ++i) k1.push_back({g.constant(random_normal(rng, {3}))});
  CHECK(g.scalar_value(decorrelation_loss(g, k1)) == 0.0);

  // an all-zero slot contributes nothing
  std::vector<std::vector<Var>> zs;
  for (int i = 0; i < 4; ++i)
    zs.push_back({g.constant(random_normal(rng, {3})), g.constant(Tensor::zeros({3}))});
  CHECK(g.scalar_value(decorrelation_loss(g, zs)) == doctest::Approx(0.0));

  // nonnegative on random batches, symmetric under slot permutation
  std::vector<std::vector<Var>> batch, swapped;
  for (int i = 0; i < 5; ++i) {
    Var a = g.constant(random_normal(rng, {3}));
    Var b = g.constant(random_normal(rng, {3}));
    batch.push_back({a, b});
    swapped.push_back({b, a});
  }
  const double v = g.scalar_value(decorrelation_loss(g, batch));
  CHECK(v >= 0.0);
  CHECK(g.scalar_value(decorrelation_loss(g, swapped)) == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("decorrelation loss matches the explicit-loop computation") {
  Graph g;
  Rng rng(12);
  const int B = 4, K = 2, Dk = 2;
  std::vector<std::vector<std::vector<double>>> raw(B);
  std::vector<std::vector<Var>> batch(B);
  for (int i = 0; i < B; ++i)
    for (int k = 0; k < K; ++k) {
      Tensor t = random_normal(rng, {Dk});
      raw[static_cast<std::size_t>(i)].push_back({t.at(0), t.at(1)});
      batch[static_cast<std::size_t>(i)].push_back(g.constant(t));
    }

  // oracle: standardize, cross-correlate, Frobenius, average over ordered pairs
  auto standardize = [&](int k) {
    std::vector<std::vector<double>> z(B, std::vector<double>(Dk));
    for (int j = 0; j < Dk; ++j) {
      double mu = 0.0;
      for (int i = 0; i < B; ++i) mu += raw[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
      mu /= B;
      double var = 0.0;
      for (int i = 0; i < B; ++i) {
        const double c = raw[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] - mu;
        var += c * c;
      }
      var /= B;
      const double sd = var > 1e-24 ? std::sqrt(var) : 1.0;
      for (int i = 0; i < B; ++i) z[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          (raw[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] - mu) / sd;
    }
    return z;
  };
  auto z0 = standardize(0), z1 = standardize(1);
  double expect = 0.0;
  for (int pair = 0; pair < 2; ++pair) {
    const auto& a = pair == 0 ? z0 : z1;
    const auto& b = pair == 0 ? z1 : z0;
    double fro = 0.0;
    for (int p = 0; p < Dk; ++p)
      for (int q = 0; q < Dk; ++q) {
        double c = 0.0;
        for (int i = 0; i < B; ++i) c += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] * b[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)];
        c /= Dk;
        fro += c * c;
      }
    expect += fro;
  }
  expect /= K * (K - 1);

  CHECK(g.scalar_value(decorrelation_loss(g, batch)) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("decorrelation gradient passes the finite-difference check") {
  ParamStore store;
  Rng rng(13);
  const int B = 3, K = 2;
  for (int i = 0; i < B; ++i)
    for (int k = 0; k < K; ++k)
      store.create("z." + std::to_string(i) + "." + std::to_string(k), random_normal(rng, {3}));
  double err = grad_check([&](Graph& g, ParamStore& s) {
    std::vector<std::vector<Var>> batch(B);
    for (int i = 0; i < B; ++i)
      for (int k = 0; k < K; ++k)
        batch[static_cast<std::size_t>(i)].push_back(g.param(s, "z." + std::to_string(i) + "." + std::to_string(k)));
    return decorrelation_loss(g, batch);
  }, store, 1e-4);
  CHECK(err < 1e-3);
}

TEST_CASE("embedding width is constant across drugs") {
  ParamStore store;
  Rng rng(14);
  auto cfg = small_cfg();
  init_encoder(store, rng, cfg, 6);
  Graph g;
  for (int k = 0; k <= cfg.K_max; ++k) {
    std::vector<Var> reps;
    for (int i = 0; i < k; ++i) reps.push_back(g.constant(random_normal(rng, {cfg.d_k()})));
    Var e = assemble_embedding(g, store, cfg, g.constant(random_normal(rng, {cfg.D_irr})), reps);
    CHECK(g.val(e).numel() == cfg.embedding_width());
  }
}

TEST_CASE("encoder gradient end to end") {
  ParamStore store;
  Rng rng(15);
  EncoderConfig cfg;
  cfg.M = 2;
  cfg.D = 6;
  cfg.D_irr = 3;
  cfg.D_rel = 3;
  cfg.K_max = 2;
  cfg.D_t = 4;
  init_encoder(store, rng, cfg, 5);
  auto mol = chem::parse_smiles("CCO");
  auto topo = nas::topology_of(mol);
  Tensor x = random_normal(rng, {3, 5});
  Tensor t1 = random_normal(rng, {4});

  double err = grad_check([&](Graph& g, ParamStore& s) {
    Var zg = encode_graph(g, s, cfg, g.constant(x), topo);
    auto d = disentangle(g, s, cfg, zg);
    auto reps = target_attend(g, s, cfg, d.z_rel, {t1});
    Var e = assemble_embedding(g, s, cfg, d.z_irr, reps);
    return g.sum(g.mul(e, e));
  }, store, 1e-4);
  CHECK(err < 1e-3);
}

}  // TEST_SUITE
