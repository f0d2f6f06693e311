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

#include "ntscc/evaluation_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace ntscc {
namespace {

constexpr double kC1 = 0.01 * 0.01;  // (k1 * L)^2 with L = 1
constexpr double kC2 = 0.03 * 0.03;
constexpr double kScaleWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

int Reflect(int p, int n) {
  if (p < 0) p = -p - 1;
  if (p >= n) p = 2 * n - p - 1;
  return p;
}

// Banded blur operator with the kernel folded over symmetric boundaries;
// B * x blurs a length-n signal.
Tensor BlurOperator(int n, int window, double sigma) {
  const int r = window / 2;
  std::vector<double> k(window);
  double sum = 0;
  for (int i = 0; i < window; ++i) {
    k[i] = std::exp(-0.5 * (i - r) * (i - r) / (sigma * sigma));
    sum += k[i];
  }
  Tensor b = Tensor::Zeros({n, n});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < window; ++j) {
      b.At(i, Reflect(i + j - r, n)) += k[j] / sum;
    }
  }
  return b;
}

// P * x halves a length-n signal by averaging pairs; applied on both axes
// the 0.5 entries compose to 1/4 per 2x2 cell.
Tensor PoolOperator(int n) {
  Tensor p = Tensor::Zeros({n / 2, n});
  for (int i = 0; i < n / 2; ++i) {
    p.At(i, 2 * i) = 0.5;
    p.At(i, 2 * i + 1) = 0.5;
  }
  return p;
}

}  // namespace

double MseValue(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) throw Error("shape: mse operands differ in size");
  double acc = 0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.numel());
}

double Psnr(const Tensor& a, const Tensor& b) {
  const double mse = MseValue(a, b);
  if (mse <= 1e-10) return 100.0;
  return 10.0 * std::log10(1.0 / mse);
}

double ToDb(double v) {
  if (v >= 1.0 - 1e-4) return 40.0;
  return -10.0 * std::log10(1.0 - v);
}

Var MsSsimExpr(ModelCtx& ctx, Var a, Var b, int h, int w, int scales,
               int window) {
  Graph& g = ctx.g;
  if (scales < 1 || scales > 5) throw Error("config: ms-ssim scales in [1,5]");
  const int div = 1 << (scales - 1);
  if (h % div != 0 || w % div != 0) {
    throw Error("config: image dims not divisible for ms-ssim scales");
  }
  if (std::min(h, w) / div < window) {
    throw Error("config: ms-ssim window larger than coarsest scale");
  }
  double wsum = 0;
  for (int s = 0; s < scales; ++s) wsum += kScaleWeights[s];

  // Per-channel planes.
  std::vector<Var> ca(3), cb(3);
  for (int c = 0; c < 3; ++c) {
    std::vector<int64_t> idx(static_cast<int64_t>(h) * w);
    for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i) {
      idx[i] = i * 3 + c;
    }
    IndexArray ia = MakeIndex(std::move(idx));
    ca[c] = g.Gather(a, ia, {h, w});
    cb[c] = g.Gather(b, ia, {h, w});
  }

  std::vector<Var> channel_scores;
  for (int c = 0; c < 3; ++c) {
    Var xa = ca[c], xb = cb[c];
    int sh = h, sw = w;
    Var score;
    for (int s = 0; s < scales; ++s) {
      Var bh = g.Input(BlurOperator(sh, window, 1.5));
      Var bw = g.Input(BlurOperator(sw, window, 1.5));
      auto blur = [&](Var x) { return g.MatMul(g.MatMul(bh, x), bw); };

      Var mu_a = blur(xa), mu_b = blur(xb);
      Var saa = g.Sub(blur(g.Mul(xa, xa)), g.Mul(mu_a, mu_a));
      Var sbb = g.Sub(blur(g.Mul(xb, xb)), g.Mul(mu_b, mu_b));
      Var sab = g.Sub(blur(g.Mul(xa, xb)), g.Mul(mu_a, mu_b));

      Var cs_map = g.Div(g.AddScalar(g.MulScalar(sab, 2.0), kC2),
                         g.AddScalar(g.Add(saa, sbb), kC2));
      const double weight = kScaleWeights[s] / wsum;
      Var term;
      if (s + 1 < scales) {
        term = g.MeanAll(cs_map);
      } else {
        Var l_map = g.Div(
            g.AddScalar(g.MulScalar(g.Mul(mu_a, mu_b), 2.0), kC1),
            g.AddScalar(g.Add(g.Mul(mu_a, mu_a), g.Mul(mu_b, mu_b)), kC1));
        term = g.MeanAll(g.Mul(l_map, cs_map));
      }
      term = g.PowConst(g.ClampMin(term, 1e-6), weight);
      score = score.valid() ? g.Mul(score, term) : term;

      if (s + 1 < scales) {
        // 2x2 average pool as P * x * P^T, with P^T built directly.
        Var ph = g.Input(PoolOperator(sh));
        Tensor pw_t = Tensor::Zeros({sw, sw / 2});
        for (int i = 0; i < sw / 2; ++i) {
          pw_t.At(2 * i, i) = 0.5;
          pw_t.At(2 * i + 1, i) = 0.5;
        }
        Var pwv = g.Input(pw_t);
        xa = g.MatMul(g.MatMul(ph, xa), pwv);
        xb = g.MatMul(g.MatMul(ph, xb), pwv);
        sh /= 2;
        sw /= 2;
      }
    }
    channel_scores.push_back(score);
  }
  Var total = g.Add(g.Add(channel_scores[0], channel_scores[1]),
                    channel_scores[2]);
  return g.MulScalar(total, 1.0 / 3.0);
}

void ChooseMsssimGeometry(int h, int w, int* scales, int* window) {
  int s = 1;
  while (s < 5 && h % (1 << s) == 0 && w % (1 << s) == 0 &&
         std::min(h, w) / (1 << s) >= 8) {
    ++s;
  }
  *scales = s;
  *window = std::min(h, w) / (1 << (s - 1)) >= 11 ? 11 : 7;
}

double MsSsim(const Tensor& a, const Tensor& b, int scales, int window) {
  if (a.dims().size() != 3 || a.dims() != b.dims() || a.dims()[2] != 3) {
    throw Error("shape: ms-ssim expects matching (h, w, 3) images");
  }
  Graph g;
  g.grad_enabled = false;
  ParamStore ps;
  ModelCtx ctx(g, ps);
  Var va = g.Input(a);
  Var vb = g.Input(b);
  Var s = MsSsimExpr(ctx, va, vb, static_cast<int>(a.dims()[0]),
                     static_cast<int>(a.dims()[1]), scales, window);
  return g.scalar(s);
}

std::string RdCsvHeader() {
  return "model,lambda,eta,snr_db,cbr_total,cbr_y,cbr_z,cbr_ratemap,"
         "psnr_db,msssim,msssim_db,seed";
}

std::string RdCsvLine(const RdPoint& p) {
  std::ostringstream os;
  os.precision(10);
  os << p.model << ',' << p.lambda << ',' << p.eta << ',' << p.snr_db << ','
     << p.cbr_total << ',' << p.cbr_y << ',' << p.cbr_z << ','
     << p.cbr_ratemap << ',' << p.psnr_db << ',' << p.msssim << ','
     << p.msssim_db << ',' << p.seed;
  return os.str();
}

namespace {

// Least-squares polynomial fit, ascending coefficients.
std::vector<double> PolyFit(const std::vector<double>& x,
                            const std::vector<double>& y, int degree) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd a(n, degree + 1);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    double p = 1;
    for (int d = 0; d <= degree; ++d) {
      a(i, d) = p;
      p *= x[i];
    }
    b(i) = y[i];
  }
  Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  return std::vector<double>(c.data(), c.data() + degree + 1);
}

double PolyIntegral(const std::vector<double>& c, double lo, double hi) {
  double acc = 0;
  double plo = lo, phi = hi;
  for (size_t d = 0; d < c.size(); ++d) {
    acc += c[d] * (phi - plo) / static_cast<double>(d + 1);
    plo *= lo;
    phi *= hi;
  }
  return acc;
}

// Shared Bjontegaard integration of y-vs-x fits over the overlapping x range.
double BdAverageDiff(std::vector<double> xr, std::vector<double> yr,
                     std::vector<double> xt, std::vector<double> yt) {
  if (xr.size() < 2 || xt.size() < 2) {
    throw Error("config: bjontegaard needs at least two points per curve");
  }
  const double lo = std::max(*std::min_element(xr.begin(), xr.end()),
                             *std::min_element(xt.begin(), xt.end()));
  const double hi = std::min(*std::max_element(xr.begin(), xr.end()),
                             *std::max_element(xt.begin(), xt.end()));
  if (!(hi > lo)) throw Error("config: bjontegaard curves do not overlap");
  const int deg_r = std::min<int>(3, static_cast<int>(xr.size()) - 1);
  const int deg_t = std::min<int>(3, static_cast<int>(xt.size()) - 1);
  const auto cr = PolyFit(xr, yr, deg_r);
  const auto ct = PolyFit(xt, yt, deg_t);
  return (PolyIntegral(ct, lo, hi) - PolyIntegral(cr, lo, hi)) / (hi - lo);
}

void SplitCurve(const std::vector<std::pair<double, double>>& curve,
                std::vector<double>* log_rate, std::vector<double>* metric) {
  for (const auto& p : curve) {
    if (!(p.first > 0)) throw Error("config: bjontegaard rate must be positive");
    log_rate->push_back(std::log10(p.first));
    metric->push_back(p.second);
  }
}

}  // namespace

double BdMetric(const std::vector<std::pair<double, double>>& ref,
                const std::vector<std::pair<double, double>>& test) {
  std::vector<double> xr, yr, xt, yt;
  SplitCurve(ref, &xr, &yr);
  SplitCurve(test, &xt, &yt);
  return BdAverageDiff(xr, yr, xt, yt);
}

double BdRate(const std::vector<std::pair<double, double>>& ref,
              const std::vector<std::pair<double, double>>& test) {
  std::vector<double> xr, yr, xt, yt;
  SplitCurve(ref, &xr, &yr);
  SplitCurve(test, &xt, &yt);
  // Swap axes: integrate log-rate as a function of the metric.
  const double avg = BdAverageDiff(yr, xr, yt, xt);
  return (std::pow(10.0, avg) - 1.0) * 100.0;
}

}  // namespace ntscc
