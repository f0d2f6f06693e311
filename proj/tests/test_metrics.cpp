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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "ntscc/evaluation_metrics.hpp"
#include "ntscc/rng.hpp"
#include "ntscc/source_pipeline.hpp"

namespace ntscc {
namespace {

Tensor Noisy(const Tensor& img, double sigma, uint64_t seed) {
  Rng rng = Substream(seed, "test/metrics-noise", 0);
  Tensor out = img;
  for (int64_t i = 0; i < out.numel(); ++i) {
    out.data()[i] =
        std::clamp(out.data()[i] + sigma * rng.Normal(), 0.0, 1.0);
  }
  return out;
}

TEST_CASE("psnr hits closed-form values") {
  Tensor a = Tensor::Full({8, 8, 3}, 0.5);
  CHECK(Psnr(a, a) == 100.0);

  Tensor b = Tensor::Full({8, 8, 3}, 0.6);
  CHECK(MseValue(a, b) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(Psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("similarity-to-db conversion and its cap") {
  CHECK(ToDb(0.9) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(ToDb(0.99) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(ToDb(1.0 - 1e-4) == 40.0);
  CHECK(ToDb(1.0) == 40.0);
  CHECK(ToDb(0.999) == doctest::Approx(30.0).epsilon(1e-12));
}

TEST_CASE("ms-ssim geometry adapts to the image size") {
  int scales = 0, window = 0;
  ChooseMsssimGeometry(32, 32, &scales, &window);
  CHECK(scales == 3);
  CHECK(window == 7);
  ChooseMsssimGeometry(16, 16, &scales, &window);
  CHECK(scales == 2);
  CHECK(window == 7);
  ChooseMsssimGeometry(256, 256, &scales, &window);
  CHECK(scales == 5);
  CHECK(window == 11);
}

TEST_CASE("ms-ssim matches the constant-image closed form") {
  // Constant planes kill every variance term, so all contrast-structure
  // factors are exactly 1 and only the final-scale luminance survives.
  Tensor a = Tensor::Full({32, 32, 3}, 0.5);
  Tensor b = Tensor::Full({32, 32, 3}, 0.6);
  const double c1 = 1e-4;
  const double l = (2 * 0.5 * 0.6 + c1) / (0.5 * 0.5 + 0.6 * 0.6 + c1);
  const double wsum = 0.0448 + 0.2856 + 0.3001;
  const double expected = std::pow(l, 0.3001 / wsum);
  CHECK(MsSsim(a, b, 3, 7) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(MsSsim(a, a, 3, 7) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ms-ssim is one at identity and decreases with noise") {
  const Tensor img = SynthTexture(21, 32).pixels;
  CHECK(MsSsim(img, img, 3, 7) == doctest::Approx(1.0).epsilon(1e-9));
  const double mild = MsSsim(img, Noisy(img, 0.02, 1), 3, 7);
  const double harsh = MsSsim(img, Noisy(img, 0.08, 2), 3, 7);
  CHECK(mild < 1.0);
  CHECK(harsh < mild);
  CHECK(harsh > 0.0);
}

TEST_CASE("ms-ssim rejects impossible geometry") {
  const Tensor img = SynthTexture(22, 32).pixels;
  CHECK_THROWS_AS(MsSsim(img, img, 4, 7), Error);   // 32/8 = 4 < window
  CHECK_THROWS_AS(MsSsim(img, img, 6, 7), Error);   // too many scales
  const Tensor odd = SynthTexture(23, 24).pixels;
  CHECK_THROWS_AS(MsSsim(odd, odd, 3, 7), Error);   // 24 % 4 == 0, 24 % 8 != 0
}

TEST_CASE("ms-ssim expression gradients agree with finite differences") {
  const Tensor ref = SynthTexture(24, 16).pixels;
  ParamStore ps;
  Tensor& probe = ps.Create("probe", {16, 16, 3});
  probe = Noisy(ref, 0.05, 3);

  auto value = [&]() {
    Graph g;
    g.grad_enabled = false;
    ModelCtx ctx(g, ps);
    Var v = MsSsimExpr(ctx, g.Input(ref), ctx.P("probe"), 16, 16, 2, 7);
    return g.scalar(v);
  };

  ps.ZeroGrads();
  {
    Graph g;
    ModelCtx ctx(g, ps);
    g.Backward(MsSsimExpr(ctx, g.Input(ref), ctx.P("probe"), 16, 16, 2, 7));
  }

  Rng rng = Substream(25, "test/metrics-fd", 0);
  const double eps = 1e-6;
  ParamEntry& e = ps.Entry("probe");
  for (int trial = 0; trial < 8; ++trial) {
    const int64_t i = static_cast<int64_t>(rng.Below(e.value.numel()));
    const double keep = e.value.data()[i];
    e.value.data()[i] = keep + eps;
    const double up = value();
    e.value.data()[i] = keep - eps;
    const double dn = value();
    e.value.data()[i] = keep;
    const double fd = (up - dn) / (2 * eps);
    const double an = e.grad.data()[i];
    const double scale = std::max({std::abs(fd), std::abs(an), 1e-4});
    CHECK(std::abs(fd - an) / scale < 1e-4);
  }
}

TEST_CASE("bjontegaard deltas recover constructed shifts") {
  std::vector<std::pair<double, double>> ref;
  for (double r : {0.02, 0.04, 0.08, 0.16}) {
    ref.emplace_back(r, 28.0 + 6.0 * std::log10(r / 0.02));
  }
  std::vector<std::pair<double, double>> up = ref;
  for (auto& p : up) p.second += 1.0;
  std::vector<std::pair<double, double>> wide = ref;
  for (auto& p : wide) p.first *= 1.1;

  CHECK(BdMetric(ref, ref) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(BdRate(ref, ref) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(BdMetric(ref, up) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(BdRate(ref, up) < -5.0);
  CHECK(BdMetric(ref, wide) < 0.0);
  CHECK(BdRate(ref, wide) == doctest::Approx(10.0).epsilon(2e-2));
}

TEST_CASE("non-overlapping rate ranges cannot be compared") {
  std::vector<std::pair<double, double>> lo = {{0.01, 30}, {0.02, 33}};
  std::vector<std::pair<double, double>> hi = {{0.1, 36}, {0.2, 39}};
  CHECK_THROWS_WITH_AS(BdMetric(lo, hi), doctest::Contains("overlap"), Error);
  CHECK_THROWS_AS(BdRate(lo, hi), Error);
}

TEST_CASE("rd csv lines carry every column") {
  RdPoint p;
  p.model = "ntscc";
  p.lambda = 64;
  p.eta = 0.2;
  p.snr_db = 10;
  p.cbr_total = 0.0315;
  p.psnr_db = 31.7;
  p.seed = 3;
  const std::string header = RdCsvHeader();
  const std::string line = RdCsvLine(p);
  CHECK(header.rfind("model,", 0) == 0);
  auto commas = [](const std::string& s) {
    int n = 0;
    for (char ch : s) n += ch == ',';
    return n;
  };
  CHECK(commas(header) == commas(line));
  CHECK(line.rfind("ntscc,", 0) == 0);
}

}  // namespace
}  // namespace ntscc
