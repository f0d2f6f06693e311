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

#ifndef NTSCC_EVALUATION_METRICS_HPP_
#define NTSCC_EVALUATION_METRICS_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ntscc/nn.hpp"
#include "ntscc/tensor.hpp"

namespace ntscc {

// Pixels live in [0, 1]; PSNR uses peak 1 and caps at 100 dB as the error
// vanishes.
double MseValue(const Tensor& a, const Tensor& b);
double Psnr(const Tensor& a, const Tensor& b);

// -10*log10(1 - v) for similarity scores, capped at 40 dB near 1.
double ToDb(double v);

// Multi-scale SSIM between two (h, w, 3) images as a graph expression, so
// the same code both scores reconstructions and serves as a training
// distortion.  Blur and 2x pooling are matmuls with constant banded
// operators (symmetric boundary reflection); scale weights are the standard
// five, truncated and renormalized when fewer scales fit the image.
Var MsSsimExpr(ModelCtx& ctx, Var a, Var b, int h, int w, int scales,
               int window);

// Evaluation wrapper; builds a throwaway graph with gradients off.
double MsSsim(const Tensor& a, const Tensor& b, int scales, int window);

// Picks as many scales as the image supports (up to the standard five) and
// a window that fits the coarsest scale.
void ChooseMsssimGeometry(int h, int w, int* scales, int* window);

struct RdPoint {
  std::string model;
  double lambda = 0, eta = 0, snr_db = 0;
  double cbr_total = 0, cbr_y = 0, cbr_z = 0, cbr_ratemap = 0;
  double psnr_db = 0, msssim = 0, msssim_db = 0;
  uint64_t seed = 0;
};

std::string RdCsvHeader();
std::string RdCsvLine(const RdPoint& p);

// Bjontegaard deltas between rate-distortion curves given as (cbr, metric)
// points.  Curves are fitted with a polynomial (cubic when there are enough
// points) of metric against log10(cbr) and integrated over the overlapping
// range; non-overlapping curves throw.
double BdMetric(const std::vector<std::pair<double, double>>& ref,
                const std::vector<std::pair<double, double>>& test);
// Average rate change in percent at equal metric (negative means the test
// curve needs fewer channel uses).
double BdRate(const std::vector<std::pair<double, double>>& ref,
              const std::vector<std::pair<double, double>>& test);

}  // namespace ntscc

#endif  // NTSCC_EVALUATION_METRICS_HPP_
