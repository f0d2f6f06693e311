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

#include "ntscc/nonlinear_transform.hpp"

#include <algorithm>

namespace ntscc {

namespace {

int PickWindow(int want, int gh, int gw) {
  int win = std::min({want, gh, gw});
  if (gh % win != 0 || gw % win != 0)
    throw Error("config: window " + std::to_string(win) + " does not tile " +
                std::to_string(gh) + "x" + std::to_string(gw));
  return win;
}

void CheckEven(int v, const char* what) {
  if (v % 2 != 0)
    throw Error("config: " + std::string(what) + " must be even, got " +
                std::to_string(v));
}

}  // namespace

AnalysisTransform::AnalysisTransform(ParamStore& ps, Rng& rng,
                                     const TransformConfig& cfg, int img_h,
                                     int img_w) {
  const int c = cfg.embed_dim;
  int gh = img_h, gw = img_w;
  for (int s = 0; s < cfg.stages; ++s) {
    CheckEven(gh, "grid height");
    CheckEven(gw, "grid width");
    Stage st;
    std::string prefix = "ga/s" + std::to_string(s);
    if (s == 0) {
      st.gather = BuildPatchEmbedIndex(img_h, img_w, 3, 2);
      st.in_width = 12;
    } else {
      st.gather = BuildPatchMergeIndex(gh, gw, c);
      st.in_width = 4 * c;
    }
    gh /= 2;
    gw /= 2;
    st.tokens = static_cast<int64_t>(gh) * gw;
    st.reduce = LinearLayer(ps, rng, prefix + "/reduce", st.in_width, c);
    int win = PickWindow(cfg.window, gh, gw);
    for (int b = 0; b < cfg.blocks[s]; ++b)
      st.blocks.emplace_back(ps, rng, prefix + "/b" + std::to_string(b), gh,
                             gw, c, cfg.heads, win, cfg.mlp_ratio);
    stages_.push_back(std::move(st));
  }
  grid_h_ = gh;
  grid_w_ = gw;
}

Var AnalysisTransform::Forward(ModelCtx& ctx, Var pixels) const {
  Var x = pixels;
  for (const Stage& st : stages_) {
    Var cols = ctx.g.Gather(x, st.gather, {st.tokens, st.in_width});
    x = st.reduce.Forward(ctx, cols);
    for (const TransformerBlock& b : st.blocks) x = b.Forward(ctx, x);
  }
  return x;
}

SynthesisTransform::SynthesisTransform(ParamStore& ps, Rng& rng,
                                       const TransformConfig& cfg, int img_h,
                                       int img_w) {
  const int c = cfg.embed_dim;
  int gh = img_h >> cfg.stages, gw = img_w >> cfg.stages;
  for (int s = cfg.stages - 1; s >= 0; --s) {
    Stage st;
    std::string prefix = "gs/s" + std::to_string(s);
    int win = PickWindow(cfg.window, gh, gw);
    for (int b = 0; b < cfg.blocks[s]; ++b)
      st.blocks.emplace_back(ps, rng, prefix + "/b" + std::to_string(b), gh,
                             gw, c, cfg.heads, win, cfg.mlp_ratio);
    if (s > 0) {
      st.expand = LinearLayer(ps, rng, prefix + "/expand", c, 4 * c);
      st.scatter = BuildPatchSplitIndex(gh, gw, c);
      st.out_tokens = static_cast<int64_t>(4) * gh * gw;
      st.out_width = c;
    } else {
      st.expand = LinearLayer(ps, rng, prefix + "/deembed", c, 12);
      st.scatter = BuildPatchSplitIndex(gh, gw, 3);
      st.out_tokens = static_cast<int64_t>(4) * gh * gw;
      st.out_width = 3;
    }
    stages_.push_back(std::move(st));
    gh *= 2;
    gw *= 2;
  }
}

Var SynthesisTransform::Forward(ModelCtx& ctx, Var latent) const {
  Var x = latent;
  for (const Stage& st : stages_) {
    for (const TransformerBlock& b : st.blocks) x = b.Forward(ctx, x);
    Var wide = st.expand.Forward(ctx, x);
    x = ctx.g.Gather(wide, st.scatter, {st.out_tokens, st.out_width});
  }
  return ctx.g.Reshape(x, {ctx.g.val(x).numel()});
}

HyperAnalysis::HyperAnalysis(ParamStore& ps, Rng& rng,
                             const TransformConfig& cfg, int grid_h,
                             int grid_w) {
  if (grid_h % 4 != 0 || grid_w % 4 != 0 || grid_h < 4 || grid_w < 4)
    throw Error("config: hyper path needs a latent grid divisible by 4, got " +
                std::to_string(grid_h) + "x" + std::to_string(grid_w));
  const int cz = cfg.hyper_ch();
  c1_ = Conv3x3(ps, rng, "ha/c1", grid_h, grid_w, cfg.embed_dim, cz, 1);
  c2_ = Conv3x3(ps, rng, "ha/c2", grid_h, grid_w, cz, cz, 2);
  c3_ = Conv3x3(ps, rng, "ha/c3", grid_h / 2, grid_w / 2, cz, cz, 2);
}

Var HyperAnalysis::Forward(ModelCtx& ctx, Var y) const {
  Var h = ctx.g.Relu(c1_.Forward(ctx, y));
  h = ctx.g.Relu(c2_.Forward(ctx, h));
  return c3_.Forward(ctx, h);
}

HyperSynthesis::HyperSynthesis(ParamStore& ps, Rng& rng,
                               const TransformConfig& cfg, int z_h, int z_w)
    : z_h_(z_h), z_w_(z_w), dim_(cfg.embed_dim), sigma_min_(cfg.sigma_min) {
  const int cz = cfg.hyper_ch();
  c1_ = Conv3x3(ps, rng, "hs/c1", 2 * z_h, 2 * z_w, cz, cz, 1);
  c2_ = Conv3x3(ps, rng, "hs/c2", 4 * z_h, 4 * z_w, cz, cz, 1);
  c3_ = Conv3x3(ps, rng, "hs/c3", 4 * z_h, 4 * z_w, cz, 2 * cfg.embed_dim, 1,
                Init::kZero);
  const int64_t l = static_cast<int64_t>(4 * z_h) * (4 * z_w);
  std::vector<int64_t> mi(l * dim_), si(l * dim_);
  for (int64_t t = 0; t < l; ++t)
    for (int64_t d = 0; d < dim_; ++d) {
      mi[t * dim_ + d] = t * (2 * dim_) + d;
      si[t * dim_ + d] = t * (2 * dim_) + dim_ + d;
    }
  mu_idx_ = MakeIndex(std::move(mi));
  sigma_idx_ = MakeIndex(std::move(si));
}

HyperSynthesis::MuSigma HyperSynthesis::Forward(ModelCtx& ctx, Var z) const {
  Graph& g = ctx.g;
  Var h = Upsample2x(ctx, z, z_h_, z_w_);
  h = g.Relu(c1_.Forward(ctx, h));
  h = Upsample2x(ctx, h, 2 * z_h_, 2 * z_w_);
  h = g.Relu(c2_.Forward(ctx, h));
  Var out = c3_.Forward(ctx, h);
  const int64_t l = static_cast<int64_t>(16) * z_h_ * z_w_;
  MuSigma ms;
  ms.mu = g.Gather(out, mu_idx_, {l, dim_});
  Var raw = g.Gather(out, sigma_idx_, {l, dim_});
  ms.sigma = g.ClampMin(g.Softplus(raw), sigma_min_);
  return ms;
}

}  // namespace ntscc
