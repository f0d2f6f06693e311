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

#ifndef NTSCC_ENTROPY_MODEL_HPP_
#define NTSCC_ENTROPY_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ntscc/nn.hpp"

namespace ntscc {

// Probabilities are floored here before any log so rates stay finite; chosen
// small enough that it never touches the mass inside the coded support
// [-64, 64] at initialization.
constexpr double kPmfFloor = 0x1p-24;

// Hyper latents are clamped to this symmetric integer support before coding.
constexpr int kZSupport = 64;

// Additive uniform noise in (-1/2, 1/2), the training-time stand-in for
// rounding.  Shape matches t; draws come from rng in row-major order.
Tensor NoiseLike(const Tensor& t, Rng& rng);

// Round half away from zero, elementwise.
Tensor QuantizeRound(const Tensor& t);

// -log2(max(p, floor)), elementwise.
Var RateBits(ModelCtx& ctx, Var pmf);

// pmf of values under Normal(mu, sigma) convolved with unit uniform noise,
// floored.  All shapes equal.
Var GaussianUniformPmf(ModelCtx& ctx, Var values, Var mu, Var sigma);

// Fully factorized density over hyper latent channels, modeled as a small
// monotone flow per channel: four layers with softplus-positive weights,
// tanh-gated residual nonlinearities and a final sigmoid.  At initialization
// every channel is exactly a logistic CDF with scale 4.5, which keeps the
// coded support well covered before training.
class FactorizedDensity {
 public:
  FactorizedDensity() = default;
  FactorizedDensity(ParamStore& ps, const std::string& prefix, int channels);

  int channels() const { return channels_; }

  // x: (channels, n) points, channel-major.  Returns CDF values, same shape.
  Var Cdf(ModelCtx& ctx, Var x) const;
  // pmf of the unit-width bins centered at x (floored): CDF(x+1/2)-CDF(x-1/2).
  Var BoxPmf(ModelCtx& ctx, Var x) const;

  // Scalar evaluation without a graph, for building coder tables.
  double CdfScalar(const ParamStore& ps, int channel, double x) const;
  // pmf table over [lo, hi] for one channel, floored.
  std::vector<double> PmfTable(const ParamStore& ps, int channel, int lo,
                               int hi) const;

 private:
  std::string prefix_;
  int channels_ = 0;
  // Layer dims: 1 -> 3 -> 3 -> 3 -> 1.
  static constexpr int kHidden = 3;
  Var ExpandVec(ModelCtx& ctx, const std::string& name, int64_t n, int width) const;
};

}  // namespace ntscc

#endif  // NTSCC_ENTROPY_MODEL_HPP_
