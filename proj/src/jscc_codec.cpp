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

#include "ntscc/jscc_codec.hpp"

#include <string>

namespace ntscc {
namespace {

// (num_rates, c) stack of the learned rate tokens, gathered per patch.
Var GatherTokens(ModelCtx& ctx, const std::vector<std::string>& names,
                 const RateAllocation& alloc, int dim) {
  std::vector<Var> rows;
  rows.reserve(names.size());
  for (const auto& n : names) rows.push_back(ctx.P(n));
  Var stack = ctx.g.ConcatRows(rows);
  const int64_t l = alloc.num_patches();
  std::vector<int64_t> idx(l * dim);
  for (int64_t i = 0; i < l; ++i) {
    for (int j = 0; j < dim; ++j) {
      idx[i * dim + j] = static_cast<int64_t>(alloc.index[i]) * dim + j;
    }
  }
  return ctx.g.Gather(stack, MakeIndex(std::move(idx)), {l, dim});
}

std::string RateName(const std::string& stem, int r) {
  return stem + "/r" + std::to_string(r);
}

}  // namespace

RateGrouping GroupByRate(const RateAllocation& alloc, int num_rates) {
  RateGrouping g;
  g.rows.resize(num_rates);
  const int l = alloc.num_patches();
  g.patch_offset.resize(l);
  int64_t off = 0;
  for (int i = 0; i < l; ++i) {
    g.rows[alloc.index[i]].push_back(i);
    g.patch_offset[i] = off;
    off += alloc.symbols[i];
  }
  g.total_symbols = off;
  for (int r = 0; r < num_rates; ++r) {
    if (!g.rows[r].empty()) g.present.push_back(r);
  }
  return g;
}

Var PowerNormalize(ModelCtx& ctx, Var s) {
  Graph& g = ctx.g;
  Var p = g.ClampMin(g.MeanAll(g.Mul(s, s)), 1e-12);
  return g.ScaleBy(s, g.PowConst(p, -0.5));
}

JsccEncoder::JsccEncoder(ParamStore& ps, Rng& rng, const SystemConfig& cfg,
                         int grid_h, int grid_w) {
  rate_adaptive_ = cfg.rate_adaptive();
  dim_ = cfg.transform.embed_dim;
  values_ = rate_adaptive_ ? cfg.rate.values : std::vector<int>{cfg.fixed_rate_v};
  const int heads = cfg.codec.heads;
  const int window = cfg.transform.window;
  for (int b = 0; b < cfg.codec.enc_blocks; ++b) {
    blocks_.emplace_back(ps, rng, "fe/blk" + std::to_string(b), grid_h, grid_w,
                         dim_, heads, window, cfg.transform.mlp_ratio);
  }
  for (size_t r = 0; r < values_.size(); ++r) {
    heads_.emplace_back(ps, rng, RateName("fe/head", static_cast<int>(r)),
                        dim_, values_[r]);
    ps.SetRateTag(heads_.back().wname(), static_cast<int>(r));
    ps.SetRateTag(heads_.back().bname(), static_cast<int>(r));
    if (rate_adaptive_) {
      const std::string tn = RateName("fe/token", static_cast<int>(r));
      Tensor& t = ps.Create(tn, {1, dim_});
      InitTensor(t, Init::kSmallNormal, rng, dim_, dim_);
      ps.SetRateTag(tn, static_cast<int>(r));
      token_names_.push_back(tn);
    }
  }
}

Var JsccEncoder::Forward(ModelCtx& ctx, Var y,
                         const RateAllocation& alloc) const {
  Graph& g = ctx.g;
  Var x = y;
  if (rate_adaptive_) {
    x = g.Add(x, GatherTokens(ctx, token_names_, alloc, dim_));
  }
  for (const auto& b : blocks_) x = b.Forward(ctx, x);

  const RateGrouping grp = GroupByRate(alloc, static_cast<int>(values_.size()));
  std::vector<Var> parts;
  std::vector<int64_t> group_offset(values_.size(), 0);
  int64_t off = 0;
  for (int r : grp.present) {
    const auto& rows = grp.rows[r];
    const int64_t n = static_cast<int64_t>(rows.size());
    std::vector<int64_t> idx(n * dim_);
    for (int64_t i = 0; i < n; ++i) {
      for (int j = 0; j < dim_; ++j) idx[i * dim_ + j] = rows[i] * dim_ + j;
    }
    Var block = g.Gather(x, MakeIndex(std::move(idx)), {n, dim_});
    Var symbols = heads_[r].Forward(ctx, block);  // (n, v)
    parts.push_back(g.Reshape(symbols, {1, n * values_[r]}));
    group_offset[r] = off;
    off += n * values_[r];
  }
  Var grouped = parts.size() == 1 ? parts[0] : g.ConcatCols(parts);

  // Reorder the rate-grouped symbols into patch-major order.
  std::vector<int64_t> within(values_.size(), 0);
  std::vector<int64_t> perm(grp.total_symbols);
  for (int i = 0; i < alloc.num_patches(); ++i) {
    const int r = alloc.index[i];
    const int v = values_[r];
    const int64_t src = group_offset[r] + within[r] * v;
    for (int j = 0; j < v; ++j) perm[grp.patch_offset[i] + j] = src + j;
    within[r] += 1;
  }
  return g.Gather(grouped, MakeIndex(std::move(perm)), {1, grp.total_symbols});
}

JsccDecoder::JsccDecoder(ParamStore& ps, Rng& rng, const SystemConfig& cfg,
                         int grid_h, int grid_w) {
  rate_adaptive_ = cfg.rate_adaptive();
  side_info_ = cfg.side_info();
  dim_ = cfg.transform.embed_dim;
  values_ = rate_adaptive_ ? cfg.rate.values : std::vector<int>{cfg.fixed_rate_v};
  const int heads = cfg.codec.heads;
  const int window = cfg.transform.window;
  for (size_t r = 0; r < values_.size(); ++r) {
    heads_.emplace_back(ps, rng, RateName("fd/head", static_cast<int>(r)),
                        values_[r], dim_);
    ps.SetRateTag(heads_.back().wname(), static_cast<int>(r));
    ps.SetRateTag(heads_.back().bname(), static_cast<int>(r));
    if (rate_adaptive_) {
      const std::string tn = RateName("fd/token", static_cast<int>(r));
      Tensor& t = ps.Create(tn, {1, dim_});
      InitTensor(t, Init::kSmallNormal, rng, dim_, dim_);
      ps.SetRateTag(tn, static_cast<int>(r));
      token_names_.push_back(tn);
    }
  }
  for (int b = 0; b < cfg.codec.dec_blocks; ++b) {
    blocks_.emplace_back(ps, rng, "fd/blk" + std::to_string(b), grid_h, grid_w,
                         dim_, heads, window, cfg.transform.mlp_ratio);
  }
  if (side_info_) {
    refine1_ = LinearLayer(ps, rng, "fd/refine/fc1", 3 * dim_, dim_);
    refine2_ = LinearLayer(ps, rng, "fd/refine/fc2", dim_, dim_, Init::kZero);
  }
}

Var JsccDecoder::Forward(ModelCtx& ctx, Var symbols,
                         const RateAllocation& alloc, Var mu,
                         Var sigma) const {
  Graph& g = ctx.g;
  const RateGrouping grp = GroupByRate(alloc, static_cast<int>(values_.size()));

  // Lift each rate group back to token width.
  std::vector<Var> parts;
  std::vector<int64_t> grouped_row(alloc.num_patches());
  int64_t row = 0;
  for (int r : grp.present) {
    const auto& rows = grp.rows[r];
    const int64_t n = static_cast<int64_t>(rows.size());
    const int v = values_[r];
    std::vector<int64_t> idx(n * v);
    for (int64_t i = 0; i < n; ++i) {
      const int64_t base = grp.patch_offset[rows[i]];
      for (int j = 0; j < v; ++j) idx[i * v + j] = base + j;
      grouped_row[rows[i]] = row++;
    }
    Var block = g.Gather(symbols, MakeIndex(std::move(idx)), {n, v});
    parts.push_back(heads_[r].Forward(ctx, block));  // (n, c)
  }
  Var grouped = parts.size() == 1 ? parts[0] : g.ConcatRows(parts);

  const int64_t l = alloc.num_patches();
  std::vector<int64_t> perm(l * dim_);
  for (int64_t i = 0; i < l; ++i) {
    for (int j = 0; j < dim_; ++j) {
      perm[i * dim_ + j] = grouped_row[i] * dim_ + j;
    }
  }
  Var x = g.Gather(grouped, MakeIndex(std::move(perm)), {l, dim_});

  if (rate_adaptive_) {
    x = g.Add(x, GatherTokens(ctx, token_names_, alloc, dim_));
  }
  for (const auto& b : blocks_) x = b.Forward(ctx, x);

  if (side_info_) {
    Var cat = g.ConcatCols({x, mu, sigma});
    Var h = g.Gelu(refine1_.Forward(ctx, cat));
    x = g.Add(x, refine2_.Forward(ctx, h));
  }
  return x;
}

}  // namespace ntscc
