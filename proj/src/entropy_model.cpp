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

#include "ntscc/entropy_model.hpp"

#include <cmath>

namespace ntscc {

namespace {
constexpr double kLn2 = 0.69314718055994530942;

double SoftplusInv(double y) { return std::log(std::expm1(y)); }

double SoftplusF(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}
}  // namespace

Tensor NoiseLike(const Tensor& t, Rng& rng) {
  Tensor n(t.dims());
  for (int64_t i = 0; i < n.numel(); ++i) n[i] = rng.UniformOffset();
  return n;
}

Tensor QuantizeRound(const Tensor& t) {
  Tensor q(t.dims());
  for (int64_t i = 0; i < t.numel(); ++i) q[i] = std::round(t[i]);
  return q;
}

Var RateBits(ModelCtx& ctx, Var pmf) {
  return ctx.g.MulScalar(ctx.g.Log(ctx.g.ClampMin(pmf, kPmfFloor)),
                         -1.0 / kLn2);
}

Var GaussianUniformPmf(ModelCtx& ctx, Var values, Var mu, Var sigma) {
  return ctx.g.ClampMin(ctx.g.GaussBoxProb(values, mu, sigma), kPmfFloor);
}

FactorizedDensity::FactorizedDensity(ParamStore& ps, const std::string& prefix,
                                     int channels)
    : prefix_(prefix), channels_(channels) {
  const int64_t C = channels;
  const int64_t H = kHidden;
  // Positive-weight init chosen so the chain collapses to
  // sigmoid(27 m^4 x) = logistic(x; scale 4.5) exactly: 27 m^4 = 1/4.5.
  const double m = std::pow(1.0 / 121.5, 0.25);
  const double w0 = SoftplusInv(m);
  ps.Create(prefix + "/H1", {C, 1, H}).Fill(w0);
  ps.Create(prefix + "/b1", {C, H});
  ps.Create(prefix + "/a1", {C, H});
  ps.Create(prefix + "/H2", {C, H, H}).Fill(w0);
  ps.Create(prefix + "/b2", {C, H});
  ps.Create(prefix + "/a2", {C, H});
  ps.Create(prefix + "/H3", {C, H, H}).Fill(w0);
  ps.Create(prefix + "/b3", {C, H});
  ps.Create(prefix + "/a3", {C, H});
  ps.Create(prefix + "/H4", {C, H, 1}).Fill(w0);
  ps.Create(prefix + "/b4", {C, 1});
}

Var FactorizedDensity::ExpandVec(ModelCtx& ctx, const std::string& name,
                                 int64_t n, int width) const {
  const int64_t C = channels_;
  std::vector<int64_t> idx(C * n * width);
  int64_t k = 0;
  for (int64_t c = 0; c < C; ++c)
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < width; ++j) idx[k++] = c * width + j;
  return ctx.g.Gather(ctx.P(name), MakeIndex(std::move(idx)), {C, n, width});
}

Var FactorizedDensity::Cdf(ModelCtx& ctx, Var x) const {
  Graph& g = ctx.g;
  const Tensor& X = g.val(x);
  if (X.ndim() != 2 || X.dim(0) != channels_)
    throw Error("shape: factorized cdf wants (channels, n), got " + X.ShapeStr());
  const int64_t n = X.dim(1);
  Var h = g.Reshape(x, {channels_, n, 1});
  auto affine = [&](Var in, const std::string& hname, const std::string& bname,
                    int width) {
    Var w = g.Softplus(ctx.P(hname));
    Var out = g.Bmm(in, w, false, false);
    return g.Add(out, ExpandVec(ctx, bname, n, width));
  };
  auto gate = [&](Var in, const std::string& aname, int width) {
    Var a = g.Tanh(ExpandVec(ctx, aname, n, width));
    return g.Add(in, g.Mul(a, g.Tanh(in)));
  };
  h = gate(affine(h, prefix_ + "/H1", prefix_ + "/b1", kHidden),
           prefix_ + "/a1", kHidden);
  h = gate(affine(h, prefix_ + "/H2", prefix_ + "/b2", kHidden),
           prefix_ + "/a2", kHidden);
  h = gate(affine(h, prefix_ + "/H3", prefix_ + "/b3", kHidden),
           prefix_ + "/a3", kHidden);
  h = affine(h, prefix_ + "/H4", prefix_ + "/b4", 1);
  return g.Reshape(g.Sigmoid(h), {channels_, n});
}

Var FactorizedDensity::BoxPmf(ModelCtx& ctx, Var x) const {
  Var hi = Cdf(ctx, ctx.g.AddScalar(x, 0.5));
  Var lo = Cdf(ctx, ctx.g.AddScalar(x, -0.5));
  return ctx.g.ClampMin(ctx.g.Sub(hi, lo), kPmfFloor);
}

double FactorizedDensity::CdfScalar(const ParamStore& ps, int channel,
                                    double x) const {
  const int H = kHidden;
  double h[kHidden] = {x, 0, 0};
  int hw = 1;
  const char* names[4] = {"/H1", "/H2", "/H3", "/H4"};
  const char* bnames[4] = {"/b1", "/b2", "/b3", "/b4"};
  const char* anames[3] = {"/a1", "/a2", "/a3"};
  for (int layer = 0; layer < 4; ++layer) {
    const Tensor& W = ps.Entry(prefix_ + names[layer]).value;
    const Tensor& B = ps.Entry(prefix_ + bnames[layer]).value;
    int ow = layer == 3 ? 1 : H;
    double out[kHidden] = {0, 0, 0};
    for (int j = 0; j < ow; ++j) {
      double acc = B[channel * ow + j];
      for (int i = 0; i < hw; ++i)
        acc += SoftplusF(W[(channel * hw + i) * ow + j]) * h[i];
      out[j] = acc;
    }
    if (layer < 3) {
      const Tensor& A = ps.Entry(prefix_ + anames[layer]).value;
      for (int j = 0; j < ow; ++j)
        out[j] += std::tanh(A[channel * ow + j]) * std::tanh(out[j]);
    }
    for (int j = 0; j < ow; ++j) h[j] = out[j];
    hw = ow;
  }
  double z = h[0];
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> FactorizedDensity::PmfTable(const ParamStore& ps,
                                                int channel, int lo,
                                                int hi) const {
  std::vector<double> pmf;
  pmf.reserve(hi - lo + 1);
  double prev = CdfScalar(ps, channel, lo - 0.5);
  for (int n = lo; n <= hi; ++n) {
    double cur = CdfScalar(ps, channel, n + 0.5);
    pmf.push_back(std::max(cur - prev, kPmfFloor));
    prev = cur;
  }
  return pmf;
}

}  // namespace ntscc
