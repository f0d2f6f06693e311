// Copyright 2026 The NTSCC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ntscc/graph.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace ntscc {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using CMatMap = Eigen::Map<const Mat>;

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline CMatMap AsMat(const Tensor& t, int64_t rows, int64_t cols) {
  return CMatMap(t.data(), rows, cols);
}
inline MatMap AsMat(Tensor& t, int64_t rows, int64_t cols) {
  return MatMap(t.data(), rows, cols);
}

// Rows/cols of a tensor viewed as (prefix, last-axis).
inline int64_t LastDim(const Tensor& t) {
  if (t.ndim() == 0) throw Error("shape: rank-0 tensor");
  return t.dims().back();
}

inline void CheckSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.SameShape(b))
    throw Error(std::string("shape: ") + op + " operands " + a.ShapeStr() +
                " vs " + b.ShapeStr());
}

inline double StableSigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double StableSoftplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double NormalCdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
inline double NormalPdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

}  // namespace

IndexArray MakeIndex(std::vector<int64_t> idx) {
  return std::make_shared<const std::vector<int64_t>>(std::move(idx));
}

Graph::Graph() { nodes_.reserve(1024); }

const Tensor& Graph::val(Var v) const {
  if (!v.valid() || static_cast<size_t>(v.id) >= nodes_.size())
    throw Error("shape: invalid Var");
  return V(v);
}

Tensor& Graph::GradBuf(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.empty()) n.grad = Tensor(V(v).dims());
  return n.grad;
}

Var Graph::Input(Tensor v) {
  Node n;
  n.val = std::move(v);
  n.rg = false;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Var Graph::Param(const Tensor& value, Tensor* sink) {
  Node n;
  n.ext = &value;
  n.sink = sink;
  n.rg = grad_enabled && sink != nullptr;
  bool rg = n.rg;
  nodes_.push_back(std::move(n));
  Var v{static_cast<int32_t>(nodes_.size() - 1)};
  if (rg) param_ids_.push_back(v.id);
  return v;
}

Var Graph::MakeOp(Tensor out, std::initializer_list<Var> parents,
                  std::function<void(Graph&, int32_t)> back) {
  bool rg = false;
  if (grad_enabled)
    for (Var p : parents) rg = rg || RG(p);
  Node n;
  n.val = std::move(out);
  n.rg = rg;
  if (rg) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Var Graph::MakeOpVec(Tensor out, const std::vector<Var>& parents,
                     std::function<void(Graph&, int32_t)> back) {
  bool rg = false;
  if (grad_enabled)
    for (Var p : parents) rg = rg || RG(p);
  Node n;
  n.val = std::move(out);
  n.rg = rg;
  if (rg) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

void Graph::Backward(Var loss) {
  if (val(loss).numel() != 1) throw Error("shape: backward needs a scalar");
  if (!nodes_[loss.id].rg) return;
  GradBuf(loss)[0] = 1.0;
  for (int32_t id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.rg && n.back && !n.grad.empty()) n.back(*this, id);
  }
  for (int32_t id : param_ids_) {
    Node& n = nodes_[id];
    if (n.sink && !n.grad.empty()) {
      double* dst = n.sink->data();
      const double* src = n.grad.data();
      for (int64_t i = 0, m = n.grad.numel(); i < m; ++i) dst[i] += src[i];
    }
  }
}

Var Graph::Add(Var a, Var b) {
  const Tensor& A = V(a);
  const Tensor& B = V(b);
  CheckSameShape(A, B, "add");
  Tensor out = A;
  const double* pb = B.data();
  double* po = out.data();
  for (int64_t i = 0, m = out.numel(); i < m; ++i) po[i] += pb[i];
  return MakeOp(std::move(out), {a, b}, [a, b](Graph& g, int32_t self) {
    const Tensor& gr = g.nodes_[self].grad;
    for (Var p : {a, b}) {
      if (!g.RG(p)) continue;
      Tensor& pg = g.GradBuf(p);
      for (int64_t i = 0, m = gr.numel(); i < m; ++i) pg[i] += gr[i];
    }
  });
}

Var Graph::Sub(Var a, Var b) {
  const Tensor& A = V(a);
  const Tensor& B = V(b);
  CheckSameShape(A, B, "sub");
  Tensor out = A;
  const double* pb = B.data();
  double* po = out.data();
  for (int64_t i = 0, m = out.numel(); i < m; ++i) po[i] -= pb[i];
  return MakeOp(std::move(out), {a, b}, [a, b](Graph& g, int32_t self) {
    const Tensor& gr = g.nodes_[self].grad;
    if (g.RG(a)) {
      Tensor& pg = g.GradBuf(a);
      for (int64_t i = 0, m = gr.numel(); i < m; ++i) pg[i] += gr[i];
    }
    if (g.RG(b)) {
      Tensor& pg = g.GradBuf(b);
      for (int64_t i = 0, m = gr.numel(); i < m; ++i) pg[i] -= gr[i];
    }
  });
}

Var Graph::Mul(Var a, Var b) {
  const Tensor& A = V(a);
  const Tensor& B = V(b);
  CheckSameShape(A, B, "mul");
  Tensor out = A;
  const double* pb = B.data();
  double* po = out.data();
  for (int64_t i = 0, m = out.numel(); i < m; ++i) po[i] *= pb[i];
  return MakeOp(std::move(out), {a, b}, [a, b](Graph& g, int32_t self) {
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& A = g.V(a);
    const Tensor& B = g.V(b);
    if (g.RG(a)) {
      Tensor& pg = g.GradBuf(a);
      for (int64_t i = 0, m = gr.numel(); i < m; ++i) pg[i] += gr[i] * B[i];
    }
    if (g.RG(b)) {
      Tensor& pg = g.GradBuf(b);
      for (int64_t i = 0, m = gr.numel(); i < m; ++i) pg[i] += gr[i] * A[i];
    }
  });
}

Var Graph::Div(Var a, Var b) {
  const Tensor& A = V(a);
  const Tensor& B = V(b);
  CheckSameShape(A, B, "div");
  Tensor out = A;
  const double* pb = B.data();
  double* po = out.data();
  for (int64_t i = 0, m = out.numel(); i < m; ++i) po[i] /= pb[i];
  return MakeOp(std::move(out), {a, b}, [a, b](Graph& g, int32_t self) {
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& C = g.nodes_[self].val;
    const Tensor& B = g.V(b);
    if (g.RG(a)) {
      Tensor& pg = g.GradBuf(a);
      for (int64_t i = 0, m = gr.numel(); i < m; ++i) pg[i] += gr[i] / B[i];
    }
    if (g.RG(b)) {
      Tensor& pg = g.GradBuf(b);
      for (int64_t i = 0, m = gr.numel(); i < m; ++i)
        pg[i] -= gr[i] * C[i] / B[i];
    }
  });
}

Var Graph::AddScalar(Var a, double c) {
  Tensor out = V(a);
  double* po = out.data();
  for (int64_t i = 0, m = out.numel(); i < m; ++i) po[i] += c;
  return MakeOp(std::move(out), {a}, [a](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i) pg[i] += gr[i];
  });
}

Var Graph::MulScalar(Var a, double c) {
  Tensor out = V(a);
  double* po = out.data();
  for (int64_t i = 0, m = out.numel(); i < m; ++i) po[i] *= c;
  return MakeOp(std::move(out), {a}, [a, c](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i) pg[i] += gr[i] * c;
  });
}

Var Graph::MatMul(Var a, Var b) {
  const Tensor& A = V(a);
  const Tensor& B = V(b);
  if (A.ndim() != 2 || B.ndim() != 2 || A.dim(1) != B.dim(0))
    throw Error("shape: matmul " + A.ShapeStr() + " x " + B.ShapeStr());
  int64_t n = A.dim(0), k = A.dim(1), m = B.dim(1);
  Tensor out({n, m});
  AsMat(out, n, m).noalias() = AsMat(A, n, k) * AsMat(B, k, m);
  return MakeOp(std::move(out), {a, b}, [a, b, n, k, m](Graph& g, int32_t self) {
    const Tensor& gr = g.nodes_[self].grad;
    CMatMap G = AsMat(gr, n, m);
    if (g.RG(a))
      AsMat(g.GradBuf(a), n, k).noalias() += G * AsMat(g.V(b), k, m).transpose();
    if (g.RG(b))
      AsMat(g.GradBuf(b), k, m).noalias() += AsMat(g.V(a), n, k).transpose() * G;
  });
}

Var Graph::Linear(Var x, Var w, Var b) {
  const Tensor& X = V(x);
  const Tensor& W = V(w);
  if (X.ndim() != 2 || W.ndim() != 2 || X.dim(1) != W.dim(0))
    throw Error("shape: linear " + X.ShapeStr() + " x " + W.ShapeStr());
  int64_t n = X.dim(0), k = X.dim(1), m = W.dim(1);
  Tensor out({n, m});
  AsMat(out, n, m).noalias() = AsMat(X, n, k) * AsMat(W, k, m);
  if (b.valid()) {
    const Tensor& B = V(b);
    if (B.numel() != m) throw Error("shape: linear bias " + B.ShapeStr());
    MatMap O = AsMat(out, n, m);
    O.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(B.data(), m);
  }
  return MakeOp(std::move(out), {x, w, b},
                [x, w, b, n, k, m](Graph& g, int32_t self) {
    const Tensor& gr = g.nodes_[self].grad;
    CMatMap G = AsMat(gr, n, m);
    if (g.RG(x))
      AsMat(g.GradBuf(x), n, k).noalias() += G * AsMat(g.V(w), k, m).transpose();
    if (g.RG(w))
      AsMat(g.GradBuf(w), k, m).noalias() += AsMat(g.V(x), n, k).transpose() * G;
    if (b.valid() && g.RG(b)) {
      Tensor& pg = g.GradBuf(b);
      Eigen::Map<Eigen::RowVectorXd>(pg.data(), m) += G.colwise().sum();
    }
  });
}

Var Graph::Bmm(Var a, Var b, bool ta, bool tb) {
  const Tensor& A = V(a);
  const Tensor& B = V(b);
  if (A.ndim() != 3 || B.ndim() != 3 || A.dim(0) != B.dim(0))
    throw Error("shape: bmm " + A.ShapeStr() + " x " + B.ShapeStr());
  int64_t bs = A.dim(0);
  int64_t n = ta ? A.dim(2) : A.dim(1);
  int64_t ka = ta ? A.dim(1) : A.dim(2);
  int64_t kb = tb ? B.dim(2) : B.dim(1);
  int64_t m = tb ? B.dim(1) : B.dim(2);
  if (ka != kb) throw Error("shape: bmm inner " + A.ShapeStr() + " x " + B.ShapeStr());
  int64_t sa = A.dim(1) * A.dim(2), sb = B.dim(1) * B.dim(2), so = n * m;
  Tensor out({bs, n, m});
  for (int64_t i = 0; i < bs; ++i) {
    CMatMap Ai(A.data() + i * sa, A.dim(1), A.dim(2));
    CMatMap Bi(B.data() + i * sb, B.dim(1), B.dim(2));
    MatMap Oi(out.data() + i * so, n, m);
    if (!ta && !tb) Oi.noalias() = Ai * Bi;
    else if (!ta && tb) Oi.noalias() = Ai * Bi.transpose();
    else if (ta && !tb) Oi.noalias() = Ai.transpose() * Bi;
    else Oi.noalias() = Ai.transpose() * Bi.transpose();
  }
  return MakeOp(std::move(out), {a, b},
                [a, b, ta, tb, bs, n, m, sa, sb, so](Graph& g, int32_t self) {
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& A = g.V(a);
    const Tensor& B = g.V(b);
    for (int64_t i = 0; i < bs; ++i) {
      CMatMap Gi(gr.data() + i * so, n, m);
      CMatMap Ai(A.data() + i * sa, A.dim(1), A.dim(2));
      CMatMap Bi(B.data() + i * sb, B.dim(1), B.dim(2));
      if (g.RG(a)) {
        MatMap dA(g.GradBuf(a).data() + i * sa, A.dim(1), A.dim(2));
        if (!ta && !tb) dA.noalias() += Gi * Bi.transpose();
        else if (!ta && tb) dA.noalias() += Gi * Bi;
        else if (ta && !tb) dA.noalias() += Bi * Gi.transpose();
        else dA.noalias() += Bi.transpose() * Gi.transpose();
      }
      if (g.RG(b)) {
        MatMap dB(g.GradBuf(b).data() + i * sb, B.dim(1), B.dim(2));
        if (!ta && !tb) dB.noalias() += Ai.transpose() * Gi;
        else if (!ta && tb) dB.noalias() += Gi.transpose() * Ai;
        else if (ta && !tb) dB.noalias() += Ai * Gi;
        else dB.noalias() += Gi.transpose() * Ai.transpose();
      }
    }
  });
}

Var Graph::Gather(Var x, IndexArray idx, std::vector<int64_t> out_dims) {
  const Tensor& X = V(x);
  int64_t n = NumelOf(out_dims);
  if (static_cast<int64_t>(idx->size()) != n)
    throw Error("shape: gather index count mismatch");
  Tensor out(std::move(out_dims));
  const int64_t xm = X.numel();
  double* po = out.data();
  const double* px = X.data();
  const int64_t* pi = idx->data();
  for (int64_t i = 0; i < n; ++i) {
    int64_t j = pi[i];
    if (j >= xm) throw Error("shape: gather index out of range");
    po[i] = j < 0 ? 0.0 : px[j];
  }
  return MakeOp(std::move(out), {x}, [x, idx, n](Graph& g, int32_t self) {
    if (!g.RG(x)) return;
    const Tensor& gr = g.nodes_[self].grad;
    Tensor& pg = g.GradBuf(x);
    const int64_t* pi = idx->data();
    for (int64_t i = 0; i < n; ++i)
      if (pi[i] >= 0) pg[pi[i]] += gr[i];
  });
}

Var Graph::ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error("shape: empty concat");
  int64_t rows = V(parts[0]).dim(0), cols = 0;
  for (Var p : parts) {
    const Tensor& t = V(p);
    if (t.ndim() != 2 || t.dim(0) != rows)
      throw Error("shape: concat_cols row mismatch");
    cols += t.dim(1);
  }
  Tensor out({rows, cols});
  int64_t off = 0;
  for (Var p : parts) {
    const Tensor& t = V(p);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < t.dim(1); ++c)
        out.At(r, off + c) = t.At(r, c);
    off += t.dim(1);
  }
  auto ps = parts;
  return MakeOpVec(std::move(out), parts, [ps, rows](Graph& g, int32_t self) {
    const Tensor& gr = g.nodes_[self].grad;
    int64_t off = 0;
    for (Var p : ps) {
      int64_t w = g.V(p).dim(1);
      if (g.RG(p)) {
        Tensor& pg = g.GradBuf(p);
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t c = 0; c < w; ++c) pg.At(r, c) += gr.At(r, off + c);
      }
      off += w;
    }
  });
}

Var Graph::ConcatRows(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error("shape: empty concat");
  int64_t cols = V(parts[0]).dim(1), rows = 0;
  for (Var p : parts) {
    const Tensor& t = V(p);
    if (t.ndim() != 2 || t.dim(1) != cols)
      throw Error("shape: concat_rows col mismatch");
    rows += t.dim(0);
  }
  Tensor out({rows, cols});
  int64_t off = 0;
  for (Var p : parts) {
    const Tensor& t = V(p);
    std::copy(t.data(), t.data() + t.numel(), out.data() + off);
    off += t.numel();
  }
  auto ps = parts;
  return MakeOpVec(std::move(out), parts, [ps](Graph& g, int32_t self) {
    const Tensor& gr = g.nodes_[self].grad;
    int64_t off = 0;
    for (Var p : ps) {
      int64_t m = g.V(p).numel();
      if (g.RG(p)) {
        Tensor& pg = g.GradBuf(p);
        for (int64_t i = 0; i < m; ++i) pg[i] += gr[off + i];
      }
      off += m;
    }
  });
}

Var Graph::Reshape(Var a, std::vector<int64_t> dims) {
  Tensor out = V(a).Reshaped(std::move(dims));
  return MakeOp(std::move(out), {a}, [a](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i) pg[i] += gr[i];
  });
}

Var Graph::LayerNorm(Var x, Var gamma, Var beta, double eps) {
  const Tensor& X = V(x);
  int64_t m = LastDim(X);
  int64_t rows = X.numel() / m;
  const Tensor& Gm = V(gamma);
  const Tensor& Bt = V(beta);
  if (Gm.numel() != m || Bt.numel() != m)
    throw Error("shape: layernorm affine params");
  Tensor out(X.dims());
  auto xhat = std::make_shared<Tensor>(X.dims());
  auto inv = std::make_shared<Tensor>(std::vector<int64_t>{rows});
  for (int64_t r = 0; r < rows; ++r) {
    const double* px = X.data() + r * m;
    double mu = 0;
    for (int64_t j = 0; j < m; ++j) mu += px[j];
    mu /= m;
    double var = 0;
    for (int64_t j = 0; j < m; ++j) {
      double d = px[j] - mu;
      var += d * d;
    }
    var /= m;
    double iv = 1.0 / std::sqrt(var + eps);
    (*inv)[r] = iv;
    double* ph = xhat->data() + r * m;
    double* po = out.data() + r * m;
    for (int64_t j = 0; j < m; ++j) {
      ph[j] = (px[j] - mu) * iv;
      po[j] = Gm[j] * ph[j] + Bt[j];
    }
  }
  return MakeOp(std::move(out), {x, gamma, beta},
                [x, gamma, beta, xhat, inv, rows, m](Graph& g, int32_t self) {
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& Gm = g.V(gamma);
    if (g.RG(gamma)) {
      Tensor& pg = g.GradBuf(gamma);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < m; ++j)
          pg[j] += gr[r * m + j] * (*xhat)[r * m + j];
    }
    if (g.RG(beta)) {
      Tensor& pg = g.GradBuf(beta);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < m; ++j) pg[j] += gr[r * m + j];
    }
    if (g.RG(x)) {
      Tensor& pg = g.GradBuf(x);
      for (int64_t r = 0; r < rows; ++r) {
        const double* pgr = gr.data() + r * m;
        const double* ph = xhat->data() + r * m;
        double s1 = 0, s2 = 0;
        for (int64_t j = 0; j < m; ++j) {
          double dh = pgr[j] * Gm[j];
          s1 += dh;
          s2 += dh * ph[j];
        }
        s1 /= m;
        s2 /= m;
        double iv = (*inv)[r];
        double* pp = pg.data() + r * m;
        for (int64_t j = 0; j < m; ++j) {
          double dh = pgr[j] * Gm[j];
          pp[j] += iv * (dh - s1 - ph[j] * s2);
        }
      }
    }
  });
}

Var Graph::SoftmaxLast(Var x) {
  const Tensor& X = V(x);
  int64_t m = LastDim(X);
  int64_t rows = X.numel() / m;
  Tensor out(X.dims());
  for (int64_t r = 0; r < rows; ++r) {
    const double* px = X.data() + r * m;
    double* po = out.data() + r * m;
    double mx = px[0];
    for (int64_t j = 1; j < m; ++j) mx = std::max(mx, px[j]);
    double sum = 0;
    for (int64_t j = 0; j < m; ++j) {
      po[j] = std::exp(px[j] - mx);
      sum += po[j];
    }
    double is = 1.0 / sum;
    for (int64_t j = 0; j < m; ++j) po[j] *= is;
  }
  return MakeOp(std::move(out), {x}, [x, rows, m](Graph& g, int32_t self) {
    if (!g.RG(x)) return;
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& Y = g.nodes_[self].val;
    Tensor& pg = g.GradBuf(x);
    for (int64_t r = 0; r < rows; ++r) {
      const double* pgr = gr.data() + r * m;
      const double* py = Y.data() + r * m;
      double dot = 0;
      for (int64_t j = 0; j < m; ++j) dot += pgr[j] * py[j];
      double* pp = pg.data() + r * m;
      for (int64_t j = 0; j < m; ++j) pp[j] += py[j] * (pgr[j] - dot);
    }
  });
}

Var Graph::Gelu(Var a) {
  const Tensor& A = V(a);
  Tensor out(A.dims());
  for (int64_t i = 0, m = A.numel(); i < m; ++i)
    out[i] = A[i] * NormalCdf(A[i]);
  return MakeOp(std::move(out), {a}, [a](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& A = g.V(a);
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i) {
      double x = A[i];
      pg[i] += gr[i] * (NormalCdf(x) + x * NormalPdf(x));
    }
  });
}

Var Graph::Relu(Var a) {
  const Tensor& A = V(a);
  Tensor out(A.dims());
  for (int64_t i = 0, m = A.numel(); i < m; ++i) out[i] = A[i] > 0 ? A[i] : 0;
  return MakeOp(std::move(out), {a}, [a](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& A = g.V(a);
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i)
      if (A[i] > 0) pg[i] += gr[i];
  });
}

Var Graph::Softplus(Var a) {
  const Tensor& A = V(a);
  Tensor out(A.dims());
  for (int64_t i = 0, m = A.numel(); i < m; ++i) out[i] = StableSoftplus(A[i]);
  return MakeOp(std::move(out), {a}, [a](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& A = g.V(a);
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i)
      pg[i] += gr[i] * StableSigmoid(A[i]);
  });
}

Var Graph::Tanh(Var a) {
  const Tensor& A = V(a);
  Tensor out(A.dims());
  for (int64_t i = 0, m = A.numel(); i < m; ++i) out[i] = std::tanh(A[i]);
  return MakeOp(std::move(out), {a}, [a](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& Y = g.nodes_[self].val;
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i)
      pg[i] += gr[i] * (1.0 - Y[i] * Y[i]);
  });
}

Var Graph::Sigmoid(Var a) {
  const Tensor& A = V(a);
  Tensor out(A.dims());
  for (int64_t i = 0, m = A.numel(); i < m; ++i) out[i] = StableSigmoid(A[i]);
  return MakeOp(std::move(out), {a}, [a](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& Y = g.nodes_[self].val;
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i)
      pg[i] += gr[i] * Y[i] * (1.0 - Y[i]);
  });
}

Var Graph::Exp(Var a) {
  const Tensor& A = V(a);
  Tensor out(A.dims());
  for (int64_t i = 0, m = A.numel(); i < m; ++i) out[i] = std::exp(A[i]);
  return MakeOp(std::move(out), {a}, [a](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& Y = g.nodes_[self].val;
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i) pg[i] += gr[i] * Y[i];
  });
}

Var Graph::Log(Var a) {
  const Tensor& A = V(a);
  Tensor out(A.dims());
  for (int64_t i = 0, m = A.numel(); i < m; ++i) {
    if (A[i] <= 0) throw Error("shape: log of non-positive value");
    out[i] = std::log(A[i]);
  }
  return MakeOp(std::move(out), {a}, [a](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& A = g.V(a);
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i) pg[i] += gr[i] / A[i];
  });
}

Var Graph::Sqrt(Var a) {
  const Tensor& A = V(a);
  Tensor out(A.dims());
  for (int64_t i = 0, m = A.numel(); i < m; ++i) out[i] = std::sqrt(A[i]);
  return MakeOp(std::move(out), {a}, [a](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& Y = g.nodes_[self].val;
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i)
      pg[i] += gr[i] * 0.5 / Y[i];
  });
}

Var Graph::PowConst(Var a, double p) {
  const Tensor& A = V(a);
  Tensor out(A.dims());
  for (int64_t i = 0, m = A.numel(); i < m; ++i) out[i] = std::pow(A[i], p);
  return MakeOp(std::move(out), {a}, [a, p](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& A = g.V(a);
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i)
      pg[i] += gr[i] * p * std::pow(A[i], p - 1.0);
  });
}

Var Graph::ClampMin(Var a, double c) {
  const Tensor& A = V(a);
  Tensor out(A.dims());
  for (int64_t i = 0, m = A.numel(); i < m; ++i) out[i] = A[i] > c ? A[i] : c;
  return MakeOp(std::move(out), {a}, [a, c](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& A = g.V(a);
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = gr.numel(); i < m; ++i)
      if (A[i] > c) pg[i] += gr[i];
  });
}

Var Graph::SumAll(Var a) {
  const Tensor& A = V(a);
  double s = 0;
  for (int64_t i = 0, m = A.numel(); i < m; ++i) s += A[i];
  return MakeOp(Tensor::Scalar(s), {a}, [a](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    double gv = g.nodes_[self].grad[0];
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0, m = pg.numel(); i < m; ++i) pg[i] += gv;
  });
}

Var Graph::MeanAll(Var a) {
  const Tensor& A = V(a);
  double s = 0;
  int64_t m = A.numel();
  for (int64_t i = 0; i < m; ++i) s += A[i];
  s /= m;
  return MakeOp(Tensor::Scalar(s), {a}, [a, m](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    double gv = g.nodes_[self].grad[0] / m;
    Tensor& pg = g.GradBuf(a);
    for (int64_t i = 0; i < m; ++i) pg[i] += gv;
  });
}

Var Graph::RowSum(Var a) {
  const Tensor& A = V(a);
  if (A.ndim() != 2) throw Error("shape: row_sum wants rank 2");
  int64_t n = A.dim(0), m = A.dim(1);
  Tensor out({n});
  for (int64_t r = 0; r < n; ++r) {
    double s = 0;
    const double* p = A.data() + r * m;
    for (int64_t j = 0; j < m; ++j) s += p[j];
    out[r] = s;
  }
  return MakeOp(std::move(out), {a}, [a, n, m](Graph& g, int32_t self) {
    if (!g.RG(a)) return;
    const Tensor& gr = g.nodes_[self].grad;
    Tensor& pg = g.GradBuf(a);
    for (int64_t r = 0; r < n; ++r) {
      double gv = gr[r];
      double* p = pg.data() + r * m;
      for (int64_t j = 0; j < m; ++j) p[j] += gv;
    }
  });
}

Var Graph::ScaleBy(Var x, Var s) {
  const Tensor& X = V(x);
  const Tensor& S = V(s);
  if (S.numel() != 1) throw Error("shape: scale_by wants scalar");
  double sv = S[0];
  Tensor out(X.dims());
  for (int64_t i = 0, m = X.numel(); i < m; ++i) out[i] = X[i] * sv;
  return MakeOp(std::move(out), {x, s}, [x, s](Graph& g, int32_t self) {
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& X = g.V(x);
    double sv = g.V(s)[0];
    if (g.RG(x)) {
      Tensor& pg = g.GradBuf(x);
      for (int64_t i = 0, m = gr.numel(); i < m; ++i) pg[i] += gr[i] * sv;
    }
    if (g.RG(s)) {
      double acc = 0;
      for (int64_t i = 0, m = gr.numel(); i < m; ++i) acc += gr[i] * X[i];
      g.GradBuf(s)[0] += acc;
    }
  });
}

Var Graph::GaussBoxProb(Var v, Var mu, Var sigma) {
  const Tensor& Vv = V(v);
  const Tensor& Mu = V(mu);
  const Tensor& Sg = V(sigma);
  CheckSameShape(Vv, Mu, "gauss_box");
  CheckSameShape(Vv, Sg, "gauss_box");
  Tensor out(Vv.dims());
  for (int64_t i = 0, m = Vv.numel(); i < m; ++i) {
    double t = Vv[i] - Mu[i];
    double s = Sg[i];
    double a = (t - 0.5) / s;
    double b = (t + 0.5) / s;
    // Evaluate in the tail away from the mode so the difference of the two
    // CDF values never cancels catastrophically.
    double p = t > 0
        ? 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2))
        : 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
    out[i] = p;
  }
  return MakeOp(std::move(out), {v, mu, sigma},
                [v, mu, sigma](Graph& g, int32_t self) {
    const Tensor& gr = g.nodes_[self].grad;
    const Tensor& Vv = g.V(v);
    const Tensor& Mu = g.V(mu);
    const Tensor& Sg = g.V(sigma);
    bool rv = g.RG(v), rm = g.RG(mu), rs = g.RG(sigma);
    Tensor* gv = rv ? &g.GradBuf(v) : nullptr;
    Tensor* gm = rm ? &g.GradBuf(mu) : nullptr;
    Tensor* gs = rs ? &g.GradBuf(sigma) : nullptr;
    for (int64_t i = 0, m = gr.numel(); i < m; ++i) {
      double t = Vv[i] - Mu[i];
      double s = Sg[i];
      double a = (t - 0.5) / s;
      double b = (t + 0.5) / s;
      double pa = NormalPdf(a), pb = NormalPdf(b);
      double dv = (pb - pa) / s;
      if (rv) (*gv)[i] += gr[i] * dv;
      if (rm) (*gm)[i] -= gr[i] * dv;
      if (rs) (*gs)[i] += gr[i] * (a * pa - b * pb) / s;
    }
  });
}

}  // namespace ntscc
