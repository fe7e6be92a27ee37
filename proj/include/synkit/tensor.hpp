//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "synkit/common.hpp"

namespace synkit {

// Dense row-major double tensor, rank 0..2 in practice.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> s) : shape(std::move(s)) {
    v.assign(static_cast<std::size_t>(numel_of(shape)), 0.0);
  }

  static std::int64_t numel_of(const std::vector<std::int64_t>& s) {
    std::int64_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<std::int64_t> s) { return Tensor(std::move(s)); }

  static Tensor full(std::vector<std::int64_t> s, double value) {
    Tensor t(std::move(s));
    std::fill(t.v.begin(), t.v.end(), value);
    return t;
  }

  static Tensor scalar(double value) {
    Tensor t({1});
    t.v[0] = value;
    return t;
  }

  static Tensor from_vector(std::vector<double> data) {
    Tensor t;
    t.shape = {static_cast<std::int64_t>(data.size())};
    t.v = std::move(data);
    return t;
  }

  static Tensor from_matrix(std::int64_t rows, std::int64_t cols, std::vector<double> data) {
    if (static_cast<std::int64_t>(data.size()) != rows * cols)
      throw ShapeMismatch("from_matrix: data size mismatch");
    Tensor t;
    t.shape = {rows, cols};
    t.v = std::move(data);
    return t;
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
  std::size_t rank() const { return shape.size(); }
  std::int64_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::int64_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(std::int64_t i) { return v[static_cast<std::size_t>(i)]; }
  double at(std::int64_t i) const { return v[static_cast<std::size_t>(i)]; }
  double& at(std::int64_t i, std::int64_t j) { return v[static_cast<std::size_t>(i * cols() + j)]; }
  double at(std::int64_t i, std::int64_t j) const { return v[static_cast<std::size_t>(i * cols() + j)]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

// C += op(A) * op(B); bare-loop GEMM in ikj order.
inline void gemm_acc(Tensor& c, const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  const std::int64_t m = trans_a ? a.cols() : a.rows();
  const std::int64_t k = trans_a ? a.rows() : a.cols();
  const std::int64_t kb = trans_b ? b.cols() : b.rows();
  const std::int64_t n = trans_b ? b.rows() : b.cols();
  if (k != kb) throw ShapeMismatch("gemm: inner dimensions disagree");
  if (c.rows() != m || c.cols() != n) throw ShapeMismatch("gemm: output shape");
  const double* pa = a.v.data();
  const double* pb = b.v.data();
  double* pc = c.v.data();
  const std::int64_t lda = a.cols(), ldb = b.cols();
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const double aik = trans_a ? pa[kk * lda + i] : pa[i * lda + kk];
      if (aik == 0.0) continue;
      if (!trans_b) {
        const double* brow = pb + kk * ldb;
        double* crow = pc + i * n;
        for (std::int64_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
      } else {
        double* crow = pc + i * n;
        for (std::int64_t j = 0; j < n; ++j) crow[j] += aik * pb[j * ldb + kk];
      }
    }
  }
}

class ParamStore;

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Tape of operations for one forward evaluation. Nodes are appended in
// creation order, so parents always precede children and the reverse
// sweep is already topological. Confined to one logical thread.
class Graph {
 public:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_alloc = false;
    std::vector<int> parents;
    std::function<void(Graph&, int)> backprop;  // pull node grad into parents
    const std::string* bound_param = nullptr;   // leaf bound to a ParamStore entry
    ParamStore* bound_store = nullptr;
  };

  Graph() { nodes_.reserve(256); }

  std::size_t size() const { return nodes_.size(); }

  const Tensor& val(Var x) const { return nodes_[check(x)].value; }
  Tensor& grad(Var x) { return grad_ref(check(x)); }

  double scalar_value(Var x) const {
    const Tensor& t = val(x);
    if (t.numel() != 1) throw NotScalar("scalar_value on tensor with numel " + std::to_string(t.numel()));
    return t.v[0];
  }

  Var constant(Tensor t) {
    return push(std::move(t), false, {}, nullptr);
  }

  Var leaf(Tensor t, bool requires_grad = true) {
    return push(std::move(t), requires_grad, {}, nullptr);
  }

  Var param(ParamStore& store, const std::string& name);

  // ---- arithmetic ----

  Var add(Var a, Var b) { return binary_broadcast(a, b, "add", [](double x, double y) { return x + y; },
                                                  [](double, double) { return 1.0; },
                                                  [](double, double) { return 1.0; }); }

  Var sub(Var a, Var b) { return binary_broadcast(a, b, "sub", [](double x, double y) { return x - y; },
                                                  [](double, double) { return 1.0; },
                                                  [](double, double) { return -1.0; }); }

  Var mul(Var a, Var b) { return binary_broadcast(a, b, "mul", [](double x, double y) { return x * y; },
                                                  [](double, double y) { return y; },
                                                  [](double x, double) { return x; }); }

  Var div(Var a, Var b) { return binary_broadcast(a, b, "div", [](double x, double y) { return x / y; },
                                                  [](double, double y) { return 1.0 / y; },
                                                  [](double x, double y) { return -x / (y * y); }); }

  Var scale(Var a, double c) {
    Tensor out = nodes_[check(a)].value;
    for (double& x : out.v) x *= c;
    Var r = push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                 [c](Graph& g, int self) {
                   auto& n = g.nodes_[self];
                   int p = n.parents[0];
                   if (!g.nodes_[p].requires_grad) return;
                   Tensor& gp = g.grad_ref(p);
                   for (std::size_t i = 0; i < gp.v.size(); ++i) gp.v[i] += c * n.grad.v[i];
                 });
    return r;
  }

  Var add_scalar(Var a, double c) {
    Tensor out = nodes_[check(a)].value;
    for (double& x : out.v) x += c;
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int p = n.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  for (std::size_t i = 0; i < gp.v.size(); ++i) gp.v[i] += n.grad.v[i];
                });
  }

  // ---- elementwise nonlinearities ----

  Var relu(Var a) {
    track_kinks(a);
    return unary(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
  }

  Var leaky_relu(Var a, double slope = 0.2) {
    track_kinks(a);
    return unary(a, "leaky_relu", [slope](double x) { return x > 0.0 ? x : slope * x; },
                 [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
  }

  // distance from the nearest piecewise-linear kink seen this evaluation;
  // finite-difference harnesses use it to certify a differentiable point
  double min_kink_gap() const { return min_kink_gap_; }

  Var tanh_(Var a) {
    return unary(a, "tanh", [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
  }

  Var exp_(Var a) {
    return unary(a, "exp", [](double x) { return std::exp(x); },
                 [](double, double y) { return y; });
  }

  Var log_(Var a) {
    return unary(a, "log", [](double x) { return std::log(x); },
                 [](double x, double) { return 1.0 / x; });
  }

  Var sqrt_(Var a) {
    return unary(a, "sqrt", [](double x) { return std::sqrt(x); },
                 [](double, double y) { return 0.5 / y; });
  }

  // ---- linear algebra ----

  Var matmul(Var a, Var b) {
    const Tensor& ta = nodes_[check(a)].value;
    const Tensor& tb = nodes_[check(b)].value;
    const bool vec_out = (tb.rank() == 1);
    Tensor a2 = ta, b2 = tb;
    if (a2.rank() == 1) a2.shape = {1, a2.numel()};
    if (b2.rank() == 1) b2.shape = {b2.numel(), 1};
    if (a2.cols() != b2.rows()) throw ShapeMismatch("matmul: inner dims");
    Tensor out({a2.rows(), b2.cols()});
    gemm_acc(out, a2, b2, false, false);
    if (vec_out && ta.rank() == 1) {
      out.shape = {1};  // dot of two vectors
    } else if (vec_out) {
      out.shape = {out.numel()};
    } else if (ta.rank() == 1) {
      out.shape = {out.numel()};
    }
    return push(std::move(out), nodes_[a.id].requires_grad || nodes_[b.id].requires_grad, {a.id, b.id},
                [](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int pa = n.parents[0], pb = n.parents[1];
                  Tensor a2 = g.nodes_[pa].value, b2 = g.nodes_[pb].value, go = n.grad;
                  if (a2.rank() == 1) a2.shape = {1, a2.numel()};
                  if (b2.rank() == 1) b2.shape = {b2.numel(), 1};
                  go.shape = {a2.rows(), b2.cols()};
                  if (g.nodes_[pa].requires_grad) {
                    Tensor da({a2.rows(), a2.cols()});
                    gemm_acc(da, go, b2, false, true);
                    Tensor& acc = g.grad_ref(pa);
                    for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += da.v[i];
                  }
                  if (g.nodes_[pb].requires_grad) {
                    Tensor db({b2.rows(), b2.cols()});
                    gemm_acc(db, a2, go, true, false);
                    Tensor& acc = g.grad_ref(pb);
                    for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += db.v[i];
                  }
                });
  }

  Var dot(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.rank() != 1 || !ta.same_shape(tb)) throw ShapeMismatch("dot: need equal-length vectors");
    return matmul(a, b);
  }

  Var transpose(Var a) {
    const Tensor& t = nodes_[check(a)].value;
    if (t.rank() != 2) throw ShapeMismatch("transpose: rank-2 only");
    Tensor out({t.cols(), t.rows()});
    for (std::int64_t i = 0; i < t.rows(); ++i)
      for (std::int64_t j = 0; j < t.cols(); ++j) out.at(j, i) = t.at(i, j);
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int p = n.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  const Tensor& go = n.grad;
                  for (std::int64_t i = 0; i < go.rows(); ++i)
                    for (std::int64_t j = 0; j < go.cols(); ++j) gp.at(j, i) += go.at(i, j);
                });
  }

  Var reshape(Var a, std::vector<std::int64_t> shape) {
    const Tensor& t = nodes_[check(a)].value;
    if (Tensor::numel_of(shape) != t.numel()) throw ShapeMismatch("reshape: numel changed");
    Tensor out = t;
    out.shape = std::move(shape);
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int p = n.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  for (std::size_t i = 0; i < gp.v.size(); ++i) gp.v[i] += n.grad.v[i];
                });
  }

  // ---- concat / slicing ----

  Var concat(const std::vector<Var>& parts, int axis) {
    if (parts.empty()) throw ShapeMismatch("concat: no parts");
    const Tensor& first = val(parts[0]);
    bool needs_grad = false;
    std::vector<int> pids;
    for (Var p : parts) {
      pids.push_back(check(p));
      needs_grad = needs_grad || nodes_[p.id].requires_grad;
    }
    Tensor out;
    if (first.rank() == 1) {
      if (axis != 0) throw ShapeMismatch("concat: vector axis must be 0");
      std::int64_t total = 0;
      for (Var p : parts) {
        if (val(p).rank() != 1) throw ShapeMismatch("concat: mixed ranks");
        total += val(p).numel();
      }
      out = Tensor({total});
      std::int64_t off = 0;
      for (Var p : parts) {
        const Tensor& t = val(p);
        std::copy(t.v.begin(), t.v.end(), out.v.begin() + off);
        off += t.numel();
      }
    } else if (first.rank() == 2 && axis == 0) {
      std::int64_t rows = 0;
      for (Var p : parts) {
        if (val(p).rank() != 2 || val(p).cols() != first.cols()) throw ShapeMismatch("concat axis 0: cols differ");
        rows += val(p).rows();
      }
      out = Tensor({rows, first.cols()});
      std::int64_t off = 0;
      for (Var p : parts) {
        const Tensor& t = val(p);
        std::copy(t.v.begin(), t.v.end(), out.v.begin() + off);
        off += t.numel();
      }
    } else if (first.rank() == 2 && axis == 1) {
      std::int64_t cols = 0;
      for (Var p : parts) {
        if (val(p).rank() != 2 || val(p).rows() != first.rows()) throw ShapeMismatch("concat axis 1: rows differ");
        cols += val(p).cols();
      }
      out = Tensor({first.rows(), cols});
      std::int64_t coff = 0;
      for (Var p : parts) {
        const Tensor& t = val(p);
        for (std::int64_t i = 0; i < t.rows(); ++i)
          for (std::int64_t j = 0; j < t.cols(); ++j) out.at(i, coff + j) = t.at(i, j);
        coff += t.cols();
      }
    } else {
      throw ShapeMismatch("concat: unsupported rank/axis");
    }
    const int ax = axis;
    return push(std::move(out), needs_grad, std::move(pids),
                [ax](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  const Tensor& go = n.grad;
                  if (g.nodes_[n.parents[0]].value.rank() == 1 || ax == 0) {
                    std::int64_t off = 0;
                    for (int p : n.parents) {
                      const std::int64_t cnt = g.nodes_[p].value.numel();
                      if (g.nodes_[p].requires_grad) {
                        Tensor& gp = g.grad_ref(p);
                        for (std::int64_t i = 0; i < cnt; ++i) gp.v[i] += go.v[off + i];
                      }
                      off += cnt;
                    }
                  } else {
                    std::int64_t coff = 0;
                    for (int p : n.parents) {
                      const Tensor& tv = g.nodes_[p].value;
                      if (g.nodes_[p].requires_grad) {
                        Tensor& gp = g.grad_ref(p);
                        for (std::int64_t i = 0; i < tv.rows(); ++i)
                          for (std::int64_t j = 0; j < tv.cols(); ++j) gp.at(i, j) += go.at(i, coff + j);
                      }
                      coff += tv.cols();
                    }
                  }
                });
  }

  Var slice_cols(Var a, std::int64_t start, std::int64_t len) {
    const Tensor& t = nodes_[check(a)].value;
    if (t.rank() != 2 || start < 0 || start + len > t.cols()) throw ShapeMismatch("slice_cols: range");
    Tensor out({t.rows(), len});
    for (std::int64_t i = 0; i < t.rows(); ++i)
      for (std::int64_t j = 0; j < len; ++j) out.at(i, j) = t.at(i, start + j);
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [start, len](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int p = n.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  const Tensor& go = n.grad;
                  for (std::int64_t i = 0; i < go.rows(); ++i)
                    for (std::int64_t j = 0; j < len; ++j) gp.at(i, start + j) += go.at(i, j);
                });
  }

  Var slice_rows(Var a, std::int64_t start, std::int64_t len) {
    const Tensor& t = nodes_[check(a)].value;
    if (t.rank() != 2 || start < 0 || start + len > t.rows()) throw ShapeMismatch("slice_rows: range");
    Tensor out({len, t.cols()});
    std::copy(t.v.begin() + start * t.cols(), t.v.begin() + (start + len) * t.cols(), out.v.begin());
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [start](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int p = n.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  const Tensor& go = n.grad;
                  const std::int64_t c = gp.cols();
                  for (std::int64_t i = 0; i < go.rows(); ++i)
                    for (std::int64_t j = 0; j < c; ++j) gp.at(start + i, j) += go.at(i, j);
                });
  }

  // ---- gather / scatter ----

  // rank-2: picks rows; rank-1: picks elements
  Var gather_rows(Var a, std::vector<std::int64_t> idx) {
    const Tensor& t = nodes_[check(a)].value;
    const std::int64_t n = static_cast<std::int64_t>(idx.size());
    Tensor out;
    if (t.rank() == 1) {
      out = Tensor({n});
      for (std::int64_t i = 0; i < n; ++i) out.at(i) = t.at(bound(idx[i], t.rows(), "gather"));
    } else {
      out = Tensor({n, t.cols()});
      for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t r = bound(idx[i], t.rows(), "gather");
        for (std::int64_t j = 0; j < t.cols(); ++j) out.at(i, j) = t.at(r, j);
      }
    }
    auto sp = std::make_shared<std::vector<std::int64_t>>(std::move(idx));
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [sp](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int p = n.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  const Tensor& go = n.grad;
                  const std::int64_t c = gp.rank() == 1 ? 1 : gp.cols();
                  for (std::size_t i = 0; i < sp->size(); ++i)
                    for (std::int64_t j = 0; j < c; ++j)
                      gp.v[(*sp)[i] * c + j] += go.v[static_cast<std::int64_t>(i) * c + j];
                });
  }

  // out[r] = sum of rows i with idx[i] == r (adjoint of gather_rows)
  Var scatter_add_rows(Var a, std::vector<std::int64_t> idx, std::int64_t n_rows) {
    const Tensor& t = nodes_[check(a)].value;
    if (static_cast<std::int64_t>(idx.size()) != t.rows()) throw ShapeMismatch("scatter: idx count");
    Tensor out;
    if (t.rank() == 1) {
      out = Tensor({n_rows});
      for (std::int64_t i = 0; i < t.rows(); ++i) out.at(bound(idx[i], n_rows, "scatter")) += t.at(i);
    } else {
      out = Tensor({n_rows, t.cols()});
      for (std::int64_t i = 0; i < t.rows(); ++i) {
        const std::int64_t r = bound(idx[i], n_rows, "scatter");
        for (std::int64_t j = 0; j < t.cols(); ++j) out.at(r, j) += t.at(i, j);
      }
    }
    auto sp = std::make_shared<std::vector<std::int64_t>>(std::move(idx));
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [sp](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int p = n.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  const Tensor& go = n.grad;
                  const std::int64_t c = gp.rank() == 1 ? 1 : gp.cols();
                  for (std::size_t i = 0; i < sp->size(); ++i)
                    for (std::int64_t j = 0; j < c; ++j)
                      gp.v[static_cast<std::int64_t>(i) * c + j] += go.v[(*sp)[i] * c + j];
                });
  }

  // picks a[i, idx[i]] for each row
  Var take_per_row(Var a, std::vector<std::int64_t> idx) {
    const Tensor& t = nodes_[check(a)].value;
    if (t.rank() != 2 || static_cast<std::int64_t>(idx.size()) != t.rows())
      throw ShapeMismatch("take_per_row: need one index per row");
    Tensor out({t.rows()});
    for (std::int64_t i = 0; i < t.rows(); ++i) out.at(i) = t.at(i, bound(idx[i], t.cols(), "take"));
    auto sp = std::make_shared<std::vector<std::int64_t>>(std::move(idx));
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [sp](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int p = n.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  for (std::size_t i = 0; i < sp->size(); ++i)
                    gp.at(static_cast<std::int64_t>(i), (*sp)[i]) += n.grad.at(static_cast<std::int64_t>(i));
                });
  }

  // ---- broadcast helpers over rows/cols of a matrix ----

  // C[i][j] = A[i][j] * u[i]
  Var mul_colvec(Var a, Var u) {
    const Tensor& ta = nodes_[check(a)].value;
    const Tensor& tu = nodes_[check(u)].value;
    if (ta.rank() != 2 || tu.rank() != 1 || tu.numel() != ta.rows()) throw ShapeMismatch("mul_colvec");
    Tensor out = ta;
    for (std::int64_t i = 0; i < ta.rows(); ++i)
      for (std::int64_t j = 0; j < ta.cols(); ++j) out.at(i, j) *= tu.at(i);
    return push(std::move(out), nodes_[a.id].requires_grad || nodes_[u.id].requires_grad, {a.id, u.id},
                [](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int pa = n.parents[0], pu = n.parents[1];
                  const Tensor& ta = g.nodes_[pa].value;
                  const Tensor& tu = g.nodes_[pu].value;
                  const Tensor& go = n.grad;
                  if (g.nodes_[pa].requires_grad) {
                    Tensor& ga = g.grad_ref(pa);
                    for (std::int64_t i = 0; i < ta.rows(); ++i)
                      for (std::int64_t j = 0; j < ta.cols(); ++j) ga.at(i, j) += go.at(i, j) * tu.at(i);
                  }
                  if (g.nodes_[pu].requires_grad) {
                    Tensor& gu = g.grad_ref(pu);
                    for (std::int64_t i = 0; i < ta.rows(); ++i) {
                      double s = 0.0;
                      for (std::int64_t j = 0; j < ta.cols(); ++j) s += go.at(i, j) * ta.at(i, j);
                      gu.at(i) += s;
                    }
                  }
                });
  }

  // C[i][j] = A[i][j] (op) v[j], broadcast across rows — provided via binary_broadcast below.

  // ---- reductions ----

  Var sum(Var a) {
    const Tensor& t = nodes_[check(a)].value;
    double s = 0.0;
    for (double x : t.v) s += x;
    return push(Tensor::scalar(s), nodes_[a.id].requires_grad, {a.id},
                [](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int p = n.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  const double go = n.grad.v[0];
                  for (double& x : gp.v) x += go;
                });
  }

  Var mean(Var a) {
    const std::int64_t n = nodes_[check(a)].value.numel();
    return scale(sum(a), 1.0 / static_cast<double>(n));
  }

  // column sums: [m,n] -> [n]
  Var sum_axis0(Var a) {
    const Tensor& t = nodes_[check(a)].value;
    if (t.rank() != 2) throw ShapeMismatch("sum_axis0: rank-2 only");
    Tensor out({t.cols()});
    for (std::int64_t i = 0; i < t.rows(); ++i)
      for (std::int64_t j = 0; j < t.cols(); ++j) out.at(j) += t.at(i, j);
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int p = n.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  for (std::int64_t i = 0; i < gp.rows(); ++i)
                    for (std::int64_t j = 0; j < gp.cols(); ++j) gp.at(i, j) += n.grad.at(j);
                });
  }

  // row sums: [m,n] -> [m]
  Var sum_axis1(Var a) {
    const Tensor& t = nodes_[check(a)].value;
    if (t.rank() != 2) throw ShapeMismatch("sum_axis1: rank-2 only");
    Tensor out({t.rows()});
    for (std::int64_t i = 0; i < t.rows(); ++i)
      for (std::int64_t j = 0; j < t.cols(); ++j) out.at(i) += t.at(i, j);
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int p = n.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  for (std::int64_t i = 0; i < gp.rows(); ++i)
                    for (std::int64_t j = 0; j < gp.cols(); ++j) gp.at(i, j) += n.grad.at(i);
                });
  }

  Var mean_axis0(Var a) {
    const std::int64_t m = nodes_[check(a)].value.rows();
    return scale(sum_axis0(a), 1.0 / static_cast<double>(m));
  }

  // ---- softmax family ----

  // vector softmax, or row-wise for matrices
  Var softmax(Var a) {
    const Tensor& t = nodes_[check(a)].value;
    Tensor out = t;
    const std::int64_t m = t.rank() == 2 ? t.rows() : 1;
    const std::int64_t n = t.rank() == 2 ? t.cols() : t.numel();
    for (std::int64_t i = 0; i < m; ++i) {
      double* row = out.v.data() + i * n;
      double mx = row[0];
      for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
      double s = 0.0;
      for (std::int64_t j = 0; j < n; ++j) {
        row[j] = std::exp(row[j] - mx);
        s += row[j];
      }
      for (std::int64_t j = 0; j < n; ++j) row[j] /= s;
    }
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [](Graph& g, int self) {
                  auto& nd = g.nodes_[self];
                  int p = nd.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  const Tensor& y = nd.value;
                  const Tensor& go = nd.grad;
                  const std::int64_t m = y.rank() == 2 ? y.rows() : 1;
                  const std::int64_t n = y.rank() == 2 ? y.cols() : y.numel();
                  for (std::int64_t i = 0; i < m; ++i) {
                    const double* yr = y.v.data() + i * n;
                    const double* gr = go.v.data() + i * n;
                    double* out = gp.v.data() + i * n;
                    double dotv = 0.0;
                    for (std::int64_t j = 0; j < n; ++j) dotv += yr[j] * gr[j];
                    for (std::int64_t j = 0; j < n; ++j) out[j] += yr[j] * (gr[j] - dotv);
                  }
                });
  }

  // row-wise softmax over the causal prefix: row i normalizes columns
  // 0..i and leaves the rest exactly zero
  Var causal_softmax(Var a) {
    const Tensor& t = nodes_[check(a)].value;
    if (t.rank() != 2 || t.rows() != t.cols()) throw ShapeMismatch("causal_softmax: square matrix");
    const std::int64_t n = t.rows();
    Tensor out({n, n});
    for (std::int64_t i = 0; i < n; ++i) {
      const double* row = t.v.data() + i * n;
      double* orow = out.v.data() + i * n;
      double mx = row[0];
      for (std::int64_t j = 1; j <= i; ++j) mx = std::max(mx, row[j]);
      double s = 0.0;
      for (std::int64_t j = 0; j <= i; ++j) {
        orow[j] = std::exp(row[j] - mx);
        s += orow[j];
      }
      for (std::int64_t j = 0; j <= i; ++j) orow[j] /= s;
    }
    // y is zero outside the prefix, so the dense softmax backward formula
    // already routes no gradient there
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [](Graph& g, int self) {
                  auto& nd = g.nodes_[self];
                  int p = nd.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  const Tensor& y = nd.value;
                  const Tensor& go = nd.grad;
                  const std::int64_t n = y.rows();
                  for (std::int64_t i = 0; i < n; ++i) {
                    const double* yr = y.v.data() + i * n;
                    const double* gr = go.v.data() + i * n;
                    double* out = gp.v.data() + i * n;
                    double dotv = 0.0;
                    for (std::int64_t j = 0; j <= i; ++j) dotv += yr[j] * gr[j];
                    for (std::int64_t j = 0; j <= i; ++j) out[j] += yr[j] * (gr[j] - dotv);
                  }
                });
  }

  Var log_softmax(Var a) {
    const Tensor& t = nodes_[check(a)].value;
    Tensor out = t;
    const std::int64_t m = t.rank() == 2 ? t.rows() : 1;
    const std::int64_t n = t.rank() == 2 ? t.cols() : t.numel();
    for (std::int64_t i = 0; i < m; ++i) {
      double* row = out.v.data() + i * n;
      double mx = row[0];
      for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
      double s = 0.0;
      for (std::int64_t j = 0; j < n; ++j) s += std::exp(row[j] - mx);
      const double lse = mx + std::log(s);
      for (std::int64_t j = 0; j < n; ++j) row[j] -= lse;
    }
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [](Graph& g, int self) {
                  auto& nd = g.nodes_[self];
                  int p = nd.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  const Tensor& y = nd.value;  // log-probs
                  const Tensor& go = nd.grad;
                  const std::int64_t m = y.rank() == 2 ? y.rows() : 1;
                  const std::int64_t n = y.rank() == 2 ? y.cols() : y.numel();
                  for (std::int64_t i = 0; i < m; ++i) {
                    const double* yr = y.v.data() + i * n;
                    const double* gr = go.v.data() + i * n;
                    double* out = gp.v.data() + i * n;
                    double s = 0.0;
                    for (std::int64_t j = 0; j < n; ++j) s += gr[j];
                    for (std::int64_t j = 0; j < n; ++j) out[j] += gr[j] - std::exp(yr[j]) * s;
                  }
                });
  }

  // per-row NLL of targets under softmax(h W): streams each row's logits
  // through registers instead of materializing the [rows, vocab] matrix
  Var softmax_xent_rows(Var h, Var w, std::vector<std::int64_t> targets) {
    const Tensor& th = nodes_[check(h)].value;
    const Tensor& tw = nodes_[check(w)].value;
    if (th.rank() != 2 || tw.rank() != 2 || th.cols() != tw.rows())
      throw ShapeMismatch("softmax_xent_rows: inner dims");
    if (static_cast<std::int64_t>(targets.size()) != th.rows())
      throw ShapeMismatch("softmax_xent_rows: one target per row");
    const std::int64_t m = th.rows(), k = th.cols(), v = tw.cols();
    Tensor out({m});
    auto probs = std::make_shared<Tensor>(Tensor({m, v}));
    std::vector<double> logits(static_cast<std::size_t>(v));
    for (std::int64_t i = 0; i < m; ++i) {
      std::fill(logits.begin(), logits.end(), 0.0);
      for (std::int64_t kk = 0; kk < k; ++kk) {
        const double hv = th.at(i, kk);
        if (hv == 0.0) continue;
        const double* wrow = tw.v.data() + kk * v;
        for (std::int64_t j = 0; j < v; ++j) logits[static_cast<std::size_t>(j)] += hv * wrow[j];
      }
      const std::int64_t tgt = bound(targets[static_cast<std::size_t>(i)], v, "xent target");
      double mx = logits[0];
      for (std::int64_t j = 1; j < v; ++j) mx = std::max(mx, logits[static_cast<std::size_t>(j)]);
      double s = 0.0;
      for (std::int64_t j = 0; j < v; ++j) {
        const double e = std::exp(logits[static_cast<std::size_t>(j)] - mx);
        probs->at(i, j) = e;
        s += e;
      }
      for (std::int64_t j = 0; j < v; ++j) probs->at(i, j) /= s;
      out.at(i) = mx + std::log(s) - logits[static_cast<std::size_t>(tgt)];
    }
    auto tgts = std::make_shared<std::vector<std::int64_t>>(std::move(targets));
    return push(std::move(out), nodes_[h.id].requires_grad || nodes_[w.id].requires_grad, {h.id, w.id},
                [probs, tgts](Graph& g, int self) {
                  auto& nd = g.nodes_[self];
                  int ph = nd.parents[0], pw = nd.parents[1];
                  const Tensor& th = g.nodes_[ph].value;
                  const Tensor& tw = g.nodes_[pw].value;
                  const std::int64_t m = th.rows(), v = tw.cols();
                  // d logits[i][j] = (p_ij - [j == target_i]) * go_i
                  Tensor dlogits({m, v});
                  for (std::int64_t i = 0; i < m; ++i) {
                    const double go = nd.grad.at(i);
                    for (std::int64_t j = 0; j < v; ++j) dlogits.at(i, j) = probs->at(i, j) * go;
                    dlogits.at(i, (*tgts)[static_cast<std::size_t>(i)]) -= go;
                  }
                  if (g.nodes_[ph].requires_grad) {
                    Tensor& gh = g.grad_ref(ph);
                    gemm_acc(gh, dlogits, tw, false, true);
                  }
                  if (g.nodes_[pw].requires_grad) {
                    gemm_acc(g.grad_ref(pw), th, dlogits, true, false);
                  }
                });
  }

  // per-row normalization to zero mean and unit variance (population)
  Var layer_normalize(Var a, double eps = 1e-8) {
    const Tensor& t = nodes_[check(a)].value;
    const std::int64_t m = t.rank() == 2 ? t.rows() : 1;
    const std::int64_t n = t.rank() == 2 ? t.cols() : t.numel();
    Tensor out = t;
    Tensor inv_sigma({m});
    for (std::int64_t i = 0; i < m; ++i) {
      double* row = out.v.data() + i * n;
      double mu = 0.0;
      for (std::int64_t j = 0; j < n; ++j) mu += row[j];
      mu /= static_cast<double>(n);
      double var = 0.0;
      for (std::int64_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
      var /= static_cast<double>(n);
      const double is = 1.0 / std::sqrt(var + eps);
      inv_sigma.at(i) = is;
      for (std::int64_t j = 0; j < n; ++j) row[j] = (row[j] - mu) * is;
    }
    auto sp = std::make_shared<Tensor>(std::move(inv_sigma));
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [sp](Graph& g, int self) {
                  auto& nd = g.nodes_[self];
                  int p = nd.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  const Tensor& y = nd.value;
                  const Tensor& go = nd.grad;
                  const std::int64_t m = y.rank() == 2 ? y.rows() : 1;
                  const std::int64_t n = y.rank() == 2 ? y.cols() : y.numel();
                  for (std::int64_t i = 0; i < m; ++i) {
                    const double* yr = y.v.data() + i * n;
                    const double* gr = go.v.data() + i * n;
                    double* out = gp.v.data() + i * n;
                    double mg = 0.0, myg = 0.0;
                    for (std::int64_t j = 0; j < n; ++j) {
                      mg += gr[j];
                      myg += gr[j] * yr[j];
                    }
                    mg /= static_cast<double>(n);
                    myg /= static_cast<double>(n);
                    const double is = sp->at(i);
                    for (std::int64_t j = 0; j < n; ++j) out[j] += is * (gr[j] - mg - yr[j] * myg);
                  }
                });
  }

  // ---- backward ----

  void backward(Var loss) {
    const int root = check(loss);
    if (nodes_[root].value.numel() != 1) throw NotScalar("backward: loss must be scalar");
    for (auto& n : nodes_) {
      n.grad_alloc = false;
      n.grad = Tensor();
    }
    grad_ref(root).v[0] = 1.0;
    for (int i = root; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.requires_grad || !n.backprop || !n.grad_alloc) continue;
      n.backprop(*this, i);
    }
    flush_param_grads();
  }

  // exposed for op implementations
  Tensor& grad_ref(int id) {
    Node& n = nodes_[id];
    if (!n.grad_alloc) {
      n.grad = Tensor(n.value.shape);
      n.grad_alloc = true;
    }
    return n.grad;
  }

  std::vector<Node> nodes_;

 private:
  double min_kink_gap_ = std::numeric_limits<double>::infinity();

  void track_kinks(Var a) {
    for (double x : nodes_[check(a)].value.v) min_kink_gap_ = std::min(min_kink_gap_, std::abs(x));
  }

  int check(Var x) const {
    if (!x.valid() || x.id >= static_cast<int>(nodes_.size())) throw Error("invalid Var");
    return x.id;
  }

  static std::int64_t bound(std::int64_t i, std::int64_t n, const char* what) {
    if (i < 0 || i >= n) throw ShapeMismatch(std::string(what) + ": index out of range");
    return i;
  }

  Var push(Tensor value, bool needs_grad, std::vector<int> parents, std::function<void(Graph&, int)> back) {
    if (!value.all_finite()) throw NonFiniteValue("operation produced non-finite values");
    Node n;
    n.value = std::move(value);
    n.requires_grad = needs_grad;
    n.parents = std::move(parents);
    n.backprop = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  template <class F, class DA, class DB>
  Var binary_broadcast(Var a, Var b, const char* name, F f, DA dfa, DB dfb) {
    const Tensor& ta = nodes_[check(a)].value;
    const Tensor& tb = nodes_[check(b)].value;
    // same shape, or b is a vector broadcast across the rows of matrix a
    const bool bcast = (ta.rank() == 2 && tb.rank() == 1 && tb.numel() == ta.cols());
    if (!bcast && !ta.same_shape(tb))
      throw ShapeMismatch(std::string(name) + ": shapes incompatible");
    Tensor out = ta;
    if (!bcast) {
      for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = f(ta.v[i], tb.v[i]);
    } else {
      for (std::int64_t i = 0; i < ta.rows(); ++i)
        for (std::int64_t j = 0; j < ta.cols(); ++j) out.at(i, j) = f(ta.at(i, j), tb.at(j));
    }
    return push(std::move(out), nodes_[a.id].requires_grad || nodes_[b.id].requires_grad, {a.id, b.id},
                [bcast, dfa, dfb](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int pa = n.parents[0], pb = n.parents[1];
                  const Tensor& ta = g.nodes_[pa].value;
                  const Tensor& tb = g.nodes_[pb].value;
                  const Tensor& go = n.grad;
                  if (!bcast) {
                    if (g.nodes_[pa].requires_grad) {
                      Tensor& ga = g.grad_ref(pa);
                      for (std::size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += go.v[i] * dfa(ta.v[i], tb.v[i]);
                    }
                    if (g.nodes_[pb].requires_grad) {
                      Tensor& gb = g.grad_ref(pb);
                      for (std::size_t i = 0; i < gb.v.size(); ++i) gb.v[i] += go.v[i] * dfb(ta.v[i], tb.v[i]);
                    }
                  } else {
                    if (g.nodes_[pa].requires_grad) {
                      Tensor& ga = g.grad_ref(pa);
                      for (std::int64_t i = 0; i < ta.rows(); ++i)
                        for (std::int64_t j = 0; j < ta.cols(); ++j)
                          ga.at(i, j) += go.at(i, j) * dfa(ta.at(i, j), tb.at(j));
                    }
                    if (g.nodes_[pb].requires_grad) {
                      Tensor& gb = g.grad_ref(pb);
                      for (std::int64_t i = 0; i < ta.rows(); ++i)
                        for (std::int64_t j = 0; j < ta.cols(); ++j)
                          gb.at(j) += go.at(i, j) * dfb(ta.at(i, j), tb.at(j));
                    }
                  }
                });
  }

  template <class F, class DF>
  Var unary(Var a, const char*, F f, DF df) {
    const Tensor& t = nodes_[check(a)].value;
    Tensor out = t;
    for (double& x : out.v) x = f(x);
    return push(std::move(out), nodes_[a.id].requires_grad, {a.id},
                [df](Graph& g, int self) {
                  auto& n = g.nodes_[self];
                  int p = n.parents[0];
                  if (!g.nodes_[p].requires_grad) return;
                  Tensor& gp = g.grad_ref(p);
                  const Tensor& x = g.nodes_[p].value;
                  const Tensor& y = n.value;
                  for (std::size_t i = 0; i < gp.v.size(); ++i) gp.v[i] += n.grad.v[i] * df(x.v[i], y.v[i]);
                });
  }

  friend class ParamStore;
  void flush_param_grads();
};

// Named collection of trainable tensors plus gradient slots and the
// global step counter. Names are kept sorted so iteration order, and
// therefore every downstream artifact, is deterministic.
class ParamStore {
 public:
  Tensor& create(const std::string& name, Tensor init) {
    auto [it, inserted] = values_.emplace(name, std::move(init));
    if (!inserted) throw DuplicateKey("parameter already exists: " + name);
    grads_.emplace(name, Tensor(it->second.shape));
    return it->second;
  }

  bool has(const std::string& name) const { return values_.count(name) > 0; }

  void erase(const std::string& name) {
    values_.erase(name);
    grads_.erase(name);
  }

  // names matching a prefix; lets callers restrict grad checks to the
  // parameters a loss actually touches
  std::vector<std::string> names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, t] : values_)
      if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
  }

  Tensor& value(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end()) throw Error("unknown parameter: " + name);
    return it->second;
  }

  const Tensor& value(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw Error("unknown parameter: " + name);
    return it->second;
  }

  Tensor& grad(const std::string& name) {
    auto it = grads_.find(name);
    if (it == grads_.end()) throw Error("unknown parameter: " + name);
    return it->second;
  }

  void zero_grads() {
    for (auto& [k, g] : grads_) std::fill(g.v.begin(), g.v.end(), 0.0);
  }

  void accumulate_grad(const std::string& name, const Tensor& g) {
    Tensor& slot = grad(name);
    if (!slot.same_shape(g)) throw ShapeMismatch("grad shape for " + name);
    for (std::size_t i = 0; i < slot.v.size(); ++i) slot.v[i] += g.v[i];
  }

  const std::map<std::string, Tensor>& entries() const { return values_; }

  std::size_t total_coords() const {
    std::size_t n = 0;
    for (auto& [k, t] : values_) n += t.v.size();
    return n;
  }

  std::uint64_t step = 0;

  // Checkpoint: "SYNK" magic, u32 version, u64 step, u64 entry count,
  // then per entry: u32 name length, name bytes, u32 rank, i64 dims,
  // little-endian f64 payload.
  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    f.write("SYNK", 4);
    write_u32(f, 1);
    write_u64(f, step);
    write_u64(f, values_.size());
    for (const auto& [name, t] : values_) {
      write_u32(f, static_cast<std::uint32_t>(name.size()));
      f.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_u32(f, static_cast<std::uint32_t>(t.shape.size()));
      for (auto d : t.shape) write_u64(f, static_cast<std::uint64_t>(d));
      f.write(reinterpret_cast<const char*>(t.v.data()),
              static_cast<std::streamsize>(t.v.size() * sizeof(double)));
    }
    if (!f) throw IoError("short write: " + path);
  }

  void load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read checkpoint: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "SYNK") throw IoError("bad checkpoint magic: " + path);
    const std::uint32_t version = read_u32(f);
    if (version != 1) throw IoError("unsupported checkpoint version " + std::to_string(version));
    step = read_u64(f);
    const std::uint64_t count = read_u64(f);
    values_.clear();
    grads_.clear();
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::uint32_t len = read_u32(f);
      std::string name(len, '\0');
      f.read(name.data(), len);
      const std::uint32_t rank = read_u32(f);
      std::vector<std::int64_t> shape(rank);
      for (auto& d : shape) d = static_cast<std::int64_t>(read_u64(f));
      Tensor t(shape);
      f.read(reinterpret_cast<char*>(t.v.data()),
             static_cast<std::streamsize>(t.v.size() * sizeof(double)));
      if (!f) throw IoError("truncated checkpoint: " + path);
      values_.emplace(std::move(name), std::move(t));
    }
    for (auto& [k, t] : values_) grads_.emplace(k, Tensor(t.shape));
  }

 private:
  static void write_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static void write_u64(std::ofstream& f, std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static std::uint32_t read_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  }
  static std::uint64_t read_u64(std::ifstream& f) {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  }

  std::map<std::string, Tensor> values_;
  std::map<std::string, Tensor> grads_;
};

inline Var Graph::param(ParamStore& store, const std::string& name) {
  Tensor& t = store.value(name);
  Var v = push(t, true, {}, nullptr);
  nodes_[v.id].bound_param = &store.entries().find(name)->first;
  nodes_[v.id].bound_store = &store;
  return v;
}

inline void Graph::flush_param_grads() {
  for (auto& n : nodes_) {
    if (n.bound_param && n.grad_alloc) n.bound_store->accumulate_grad(*n.bound_param, n.grad);
  }
}

// Max relative error between backward gradients and central finite
// differences, over every coordinate of every parameter in the store.
inline double grad_check(const std::function<Var(Graph&, ParamStore&)>& f, ParamStore& store,
                         double eps = 1e-4, const std::vector<std::string>* only_params = nullptr) {
  if (eps <= 0.0) throw Error("grad_check: eps must be positive");
  store.zero_grads();
  std::map<std::string, Tensor> analytic;
  {
    Graph g;
    Var loss = f(g, store);
    g.backward(loss);
    for (const auto& [name, t] : store.entries()) analytic.emplace(name, store.grad(name));
  }
  auto eval = [&]() {
    Graph g;
    Var loss = f(g, store);
    return g.scalar_value(loss);
  };
  double max_err = 0.0;
  std::vector<std::string> names;
  if (only_params) {
    names = *only_params;
  } else {
    for (const auto& [name, t] : store.entries()) names.push_back(name);
  }
  for (const auto& name : names) {
    Tensor& t = store.value(name);
    for (std::size_t i = 0; i < t.v.size(); ++i) {
      const double saved = t.v[i];
      t.v[i] = saved + eps;
      const double fp = eval();
      t.v[i] = saved - eps;
      const double fm = eval();
      t.v[i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      if (!std::isfinite(numeric)) throw NonFiniteValue("grad_check: non-finite finite difference");
      const double err = std::abs(analytic.at(name).v[i] - numeric) / std::max(1.0, std::abs(numeric));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

// ---- plain-tensor helpers shared by init code and oracles ----

inline Tensor random_uniform(Rng& rng, std::vector<std::int64_t> shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

inline Tensor random_normal(Rng& rng, std::vector<std::int64_t> shape, double stddev = 1.0) {
  Tensor t(std::move(shape));
  for (double& x : t.v) x = rng.normal() * stddev;
  return t;
}

// Xavier-style uniform init for a [out, in] weight matrix.
inline Tensor glorot(Rng& rng, std::int64_t out_dim, std::int64_t in_dim) {
  const double s = std::sqrt(6.0 / static_cast<double>(out_dim + in_dim));
  return random_uniform(rng, {out_dim, in_dim}, -s, s);
}

}  // namespace synkit
