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

#ifndef NTSCC_NONLINEAR_TRANSFORM_HPP_
#define NTSCC_NONLINEAR_TRANSFORM_HPP_

#include <string>
#include <vector>

#include "ntscc/config.hpp"
#include "ntscc/nn.hpp"

namespace ntscc {

// Analysis transform: (h*w*3) pixels -> (l, c) latent tokens.  A 2x2 patch
// embedding followed by per-stage transformer blocks, with a patch merge
// (4c -> c) between stages.  Window attention throughout, no shifting.
class AnalysisTransform {
 public:
  AnalysisTransform() = default;
  AnalysisTransform(ParamStore& ps, Rng& rng, const TransformConfig& cfg,
                    int img_h, int img_w);
  Var Forward(ModelCtx& ctx, Var pixels) const;
  int grid_h() const { return grid_h_; }
  int grid_w() const { return grid_w_; }

 private:
  struct Stage {
    LinearLayer reduce;  // embed or merge
    IndexArray gather;
    int64_t tokens = 0, in_width = 0;
    std::vector<TransformerBlock> blocks;
  };
  std::vector<Stage> stages_;
  int grid_h_ = 0, grid_w_ = 0;
};

// Synthesis transform, mirroring the analysis: per-stage blocks, a patch
// split (c -> 4c then pixel reshuffle) between stages, and a final 2x2
// de-embedding back to (h*w*3) pixels.
class SynthesisTransform {
 public:
  SynthesisTransform() = default;
  SynthesisTransform(ParamStore& ps, Rng& rng, const TransformConfig& cfg,
                     int img_h, int img_w);
  Var Forward(ModelCtx& ctx, Var latent) const;

 private:
  struct Stage {
    std::vector<TransformerBlock> blocks;
    LinearLayer expand;  // c -> 4c (split) or c -> 12 (de-embed)
    IndexArray scatter;
    int64_t out_tokens = 0, out_width = 0;
  };
  std::vector<Stage> stages_;
};

// Hyper analysis: latent grid -> hyper latent at 1/4 grid resolution.
class HyperAnalysis {
 public:
  HyperAnalysis() = default;
  HyperAnalysis(ParamStore& ps, Rng& rng, const TransformConfig& cfg,
                int grid_h, int grid_w);
  Var Forward(ModelCtx& ctx, Var y) const;
  int out_h() const { return c3_.out_h(); }
  int out_w() const { return c3_.out_w(); }

 private:
  Conv3x3 c1_, c2_, c3_;
};

// Hyper synthesis: hyper latent -> per-latent-element (mu, sigma).  The
// final conv is zero-initialized, so before training mu = 0 and
// sigma = softplus(0) everywhere.
class HyperSynthesis {
 public:
  struct MuSigma {
    Var mu, sigma;
  };
  HyperSynthesis() = default;
  HyperSynthesis(ParamStore& ps, Rng& rng, const TransformConfig& cfg,
                 int z_h, int z_w);
  MuSigma Forward(ModelCtx& ctx, Var z) const;

 private:
  Conv3x3 c1_, c2_, c3_;
  IndexArray mu_idx_, sigma_idx_;
  int z_h_ = 0, z_w_ = 0, dim_ = 0;
  double sigma_min_ = 0.05;
};

}  // namespace ntscc

#endif  // NTSCC_NONLINEAR_TRANSFORM_HPP_
