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

#ifndef NTSCC_NN_HPP_
#define NTSCC_NN_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ntscc/graph.hpp"
#include "ntscc/rng.hpp"
#include "ntscc/tensor.hpp"

namespace ntscc {

// Named parameter with optimizer state.  rate_tag marks parameters that
// belong to one entry of the bandwidth set; the optimizer skips tagged
// parameters entirely (no moment or step update) when that rate was not
// used in the batch, keeping unused heads bit-identical.
struct ParamEntry {
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;
  int64_t t = 0;
  int rate_tag = -1;
};

class ParamStore {
 public:
  Tensor& Create(const std::string& name, std::vector<int64_t> dims);
  bool Has(const std::string& name) const { return e_.count(name) > 0; }
  ParamEntry& Entry(const std::string& name);
  const ParamEntry& Entry(const std::string& name) const;
  Tensor& Value(const std::string& name) { return Entry(name).value; }
  void SetRateTag(const std::string& name, int tag) { Entry(name).rate_tag = tag; }

  void ZeroGrads();
  int64_t TotalParams() const;
  size_t NumTensors() const { return e_.size(); }

  // Deterministic iteration (lexicographic by name).
  std::map<std::string, ParamEntry>& entries() { return e_; }
  const std::map<std::string, ParamEntry>& entries() const { return e_; }

  // Binary checkpoint with optimizer state and a free-form metadata string.
  void Save(const std::string& path, const std::string& metadata) const;
  // Returns the stored metadata.  Shapes must match any pre-created entries.
  std::string Load(const std::string& path);

 private:
  std::map<std::string, ParamEntry> e_;
};

// Reads just the metadata string of a checkpoint (still verifies the hash).
// Lets callers reject an incompatible file before mutating any ParamStore.
std::string PeekCheckpointMetadata(const std::string& path);

// Per-graph context: builds parameter leaves on demand and memoizes them so
// each parameter appears once per graph no matter how many layers share it.
struct ModelCtx {
  Graph& g;
  ParamStore& ps;
  std::unordered_map<std::string, Var> cache;

  ModelCtx(Graph& graph, ParamStore& store) : g(graph), ps(store) {}
  Var P(const std::string& name);
};

enum class Init { kXavier, kZero, kSmallNormal };

void InitTensor(Tensor& t, Init kind, Rng& rng, int64_t fan_in, int64_t fan_out);

class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(ParamStore& ps, Rng& rng, const std::string& prefix, int64_t in,
              int64_t out, Init kind = Init::kXavier, bool bias = true);
  Var Forward(ModelCtx& ctx, Var x) const;
  const std::string& wname() const { return wname_; }
  const std::string& bname() const { return bname_; }

 private:
  std::string wname_, bname_;
  bool bias_ = true;
};

class LayerNormLayer {
 public:
  LayerNormLayer() = default;
  LayerNormLayer(ParamStore& ps, const std::string& prefix, int64_t dim);
  Var Forward(ModelCtx& ctx, Var x) const;

 private:
  std::string gname_, bname_;
};

// Non-shifted window attention over a fixed token grid, with a learned
// relative positional bias per head.  All data movement is precomputed
// index gathers.
class WindowAttention {
 public:
  WindowAttention() = default;
  WindowAttention(ParamStore& ps, Rng& rng, const std::string& prefix,
                  int grid_h, int grid_w, int dim, int heads, int window);
  Var Forward(ModelCtx& ctx, Var x) const;

 private:
  LinearLayer qkv_, proj_;
  std::string bias_name_;
  int dim_ = 0, heads_ = 0, window_ = 0;
  int64_t batches_ = 0, wsize_ = 0, dh_ = 0, tokens_ = 0;
  IndexArray idx_q_, idx_k_, idx_v_, idx_bias_, idx_merge_;
};

// Transformer block: o1 = x + attn(x); o2 = o1 + mlp(layernorm(o1)).
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(ParamStore& ps, Rng& rng, const std::string& prefix,
                   int grid_h, int grid_w, int dim, int heads, int window,
                   double mlp_ratio);
  Var Forward(ModelCtx& ctx, Var x) const;

 private:
  WindowAttention attn_;
  LayerNormLayer ln_;
  LinearLayer fc1_, fc2_;
};

// 3x3 convolution over a token grid (tokens row-major, one row per
// position), via im2col gather.  Stride 1 or 2, zero padding 1.
class Conv3x3 {
 public:
  Conv3x3() = default;
  Conv3x3(ParamStore& ps, Rng& rng, const std::string& prefix, int in_h,
          int in_w, int in_ch, int out_ch, int stride,
          Init kind = Init::kXavier);
  Var Forward(ModelCtx& ctx, Var x) const;
  int out_h() const { return out_h_; }
  int out_w() const { return out_w_; }

 private:
  LinearLayer kernel_;
  IndexArray im2col_;
  int out_h_ = 0, out_w_ = 0;
  int64_t patch_ = 0;
};

// Nearest-neighbor 2x upsampling of a token grid.
Var Upsample2x(ModelCtx& ctx, Var x, int h, int w);

// Index builders (shared with transform layers and tests).
IndexArray BuildPatchEmbedIndex(int img_h, int img_w, int ch, int patch);
IndexArray BuildPatchMergeIndex(int grid_h, int grid_w, int ch);
IndexArray BuildPatchSplitIndex(int grid_h, int grid_w, int ch);
IndexArray BuildUpsampleIndex(int h, int w, int ch);

}  // namespace ntscc

#endif  // NTSCC_NN_HPP_
