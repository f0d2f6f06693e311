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

#ifndef NTSCC_JSCC_CODEC_HPP_
#define NTSCC_JSCC_CODEC_HPP_

#include <string>
#include <vector>

#include "ntscc/config.hpp"
#include "ntscc/nn.hpp"
#include "ntscc/rate_allocator.hpp"

namespace ntscc {

// Patches grouped by their allocated rate.  Heads run once per distinct
// rate on a row-gathered block; the permutations below restore patch order.
struct RateGrouping {
  std::vector<std::vector<int64_t>> rows;  // per rate index, ascending patches
  std::vector<int> present;                // rate indices in use, ascending
  std::vector<int64_t> patch_offset;       // per patch, patch-major symbol start
  int64_t total_symbols = 0;
};

RateGrouping GroupByRate(const RateAllocation& alloc, int num_rates);

// Scales a symbol row vector to unit average power.
Var PowerNormalize(ModelCtx& ctx, Var s);

// Channel encoder: latent tokens plus a learned per-rate token run through a
// transformer stack, then a per-rate linear head maps each patch to its
// allocated number of channel symbols.  Output is one row, patch-major.
class JsccEncoder {
 public:
  JsccEncoder() = default;
  JsccEncoder(ParamStore& ps, Rng& rng, const SystemConfig& cfg, int grid_h,
              int grid_w);

  // y: (l, c); returns (1, alloc.total_symbols), not yet power normalized.
  Var Forward(ModelCtx& ctx, Var y, const RateAllocation& alloc) const;

 private:
  std::vector<TransformerBlock> blocks_;
  std::vector<LinearLayer> heads_;
  std::vector<std::string> token_names_;
  bool rate_adaptive_ = true;
  int dim_ = 0;
  std::vector<int> values_;
};

// Channel decoder: per-rate input heads lift received symbols back to token
// width, a transformer stack mixes them, and (when the hyper side link
// exists) a residual refinement conditions on the decoded prior.
class JsccDecoder {
 public:
  JsccDecoder() = default;
  JsccDecoder(ParamStore& ps, Rng& rng, const SystemConfig& cfg, int grid_h,
              int grid_w);

  // symbols: (1, alloc.total_symbols) patch-major.  mu/sigma are the decoded
  // prior (l, c) and are only read when the model carries side info; pass
  // default Vars otherwise.  Returns (l, c).
  Var Forward(ModelCtx& ctx, Var symbols, const RateAllocation& alloc, Var mu,
              Var sigma) const;

 private:
  std::vector<LinearLayer> heads_;
  std::vector<std::string> token_names_;
  std::vector<TransformerBlock> blocks_;
  LinearLayer refine1_, refine2_;
  bool rate_adaptive_ = true;
  bool side_info_ = true;
  int dim_ = 0;
  std::vector<int> values_;
};

}  // namespace ntscc

#endif  // NTSCC_JSCC_CODEC_HPP_
