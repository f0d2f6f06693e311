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

#include "ntscc/nn.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace ntscc {

Tensor& ParamStore::Create(const std::string& name, std::vector<int64_t> dims) {
  if (Has(name)) throw Error("config: duplicate parameter " + name);
  ParamEntry e;
  e.value = Tensor(dims);
  e.grad = Tensor(dims);
  e.m = Tensor(dims);
  e.v = Tensor(std::move(dims));
  auto [it, ok] = e_.emplace(name, std::move(e));
  (void)ok;
  return it->second.value;
}

ParamEntry& ParamStore::Entry(const std::string& name) {
  auto it = e_.find(name);
  if (it == e_.end()) throw Error("config: unknown parameter " + name);
  return it->second;
}

const ParamEntry& ParamStore::Entry(const std::string& name) const {
  auto it = e_.find(name);
  if (it == e_.end()) throw Error("config: unknown parameter " + name);
  return it->second;
}

void ParamStore::ZeroGrads() {
  for (auto& [name, e] : e_) e.grad.SetZero();
}

int64_t ParamStore::TotalParams() const {
  int64_t n = 0;
  for (auto& [name, e] : e_) n += e.value.numel();
  return n;
}

namespace {

void PutBytes(std::string& out, const void* p, size_t n) {
  out.append(reinterpret_cast<const char*>(p), n);
}
template <typename T>
void Put(std::string& out, T v) {
  PutBytes(out, &v, sizeof(v));
}

struct ByteReader {
  const uint8_t* p;
  size_t n, off = 0;
  void Read(void* dst, size_t k) {
    if (off + k > n) throw Error("io: truncated checkpoint");
    std::memcpy(dst, p + off, k);
    off += k;
  }
  void Skip(size_t k) {
    if (off + k > n) throw Error("io: truncated checkpoint");
    off += k;
  }
  template <typename T>
  T Get() {
    T v;
    Read(&v, sizeof(v));
    return v;
  }
};

uint64_t FnvBytes(const void* data, size_t n) {
  const uint8_t* p = static_cast<const uint8_t*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string ReadCheckpointFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("io: cannot open checkpoint " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 20) throw Error("io: truncated checkpoint " + path);
  uint64_t stored;
  std::memcpy(&stored, buf.data() + buf.size() - 8, 8);
  if (stored != FnvBytes(buf.data(), buf.size() - 8))
    throw Error("io: checkpoint hash mismatch " + path);
  return buf;
}

}  // namespace

void ParamStore::Save(const std::string& path, const std::string& metadata) const {
  std::string buf;
  buf.reserve(1 << 20);
  const char magic[8] = {'N', 'T', 'S', 'C', 'C', 'K', 'P', '1'};
  PutBytes(buf, magic, 8);
  Put<uint32_t>(buf, static_cast<uint32_t>(e_.size()));
  for (const auto& [name, e] : e_) {
    Put<uint16_t>(buf, static_cast<uint16_t>(name.size()));
    PutBytes(buf, name.data(), name.size());
    Put<uint8_t>(buf, static_cast<uint8_t>(e.value.ndim()));
    for (int64_t d : e.value.dims()) Put<int64_t>(buf, d);
    PutBytes(buf, e.value.data(), sizeof(double) * e.value.numel());
    Put<uint8_t>(buf, 1);
    PutBytes(buf, e.m.data(), sizeof(double) * e.m.numel());
    PutBytes(buf, e.v.data(), sizeof(double) * e.v.numel());
    Put<int64_t>(buf, e.t);
    Put<int32_t>(buf, e.rate_tag);
  }
  Put<uint32_t>(buf, static_cast<uint32_t>(metadata.size()));
  PutBytes(buf, metadata.data(), metadata.size());
  Put<uint64_t>(buf, FnvBytes(buf.data(), buf.size()));

  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("io: cannot write " + tmp);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw Error("io: short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string ParamStore::Load(const std::string& path) {
  const std::string buf = ReadCheckpointFile(path);
  ByteReader r{reinterpret_cast<const uint8_t*>(buf.data()), buf.size() - 8};
  char magic[8];
  r.Read(magic, 8);
  if (std::memcmp(magic, "NTSCCKP1", 8) != 0)
    throw Error("io: not a checkpoint file " + path);
  uint32_t count = r.Get<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t len = r.Get<uint16_t>();
    std::string name(len, '\0');
    r.Read(name.data(), len);
    uint8_t nd = r.Get<uint8_t>();
    std::vector<int64_t> dims(nd);
    for (auto& d : dims) d = r.Get<int64_t>();
    if (!Has(name)) Create(name, dims);
    ParamEntry& e = Entry(name);
    if (e.value.dims() != dims)
      throw Error("io: checkpoint shape mismatch for " + name);
    r.Read(e.value.data(), sizeof(double) * e.value.numel());
    uint8_t has_opt = r.Get<uint8_t>();
    if (has_opt) {
      r.Read(e.m.data(), sizeof(double) * e.m.numel());
      r.Read(e.v.data(), sizeof(double) * e.v.numel());
      e.t = r.Get<int64_t>();
      e.rate_tag = r.Get<int32_t>();
    }
  }
  uint32_t mlen = r.Get<uint32_t>();
  std::string metadata(mlen, '\0');
  r.Read(metadata.data(), mlen);
  return metadata;
}

std::string PeekCheckpointMetadata(const std::string& path) {
  const std::string buf = ReadCheckpointFile(path);
  ByteReader r{reinterpret_cast<const uint8_t*>(buf.data()), buf.size() - 8};
  char magic[8];
  r.Read(magic, 8);
  if (std::memcmp(magic, "NTSCCKP1", 8) != 0)
    throw Error("io: not a checkpoint file " + path);
  uint32_t count = r.Get<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t len = r.Get<uint16_t>();
    r.Skip(len);
    uint8_t nd = r.Get<uint8_t>();
    int64_t numel = 1;
    for (uint8_t d = 0; d < nd; ++d) numel *= r.Get<int64_t>();
    r.Skip(sizeof(double) * static_cast<size_t>(numel));
    uint8_t has_opt = r.Get<uint8_t>();
    if (has_opt)
      r.Skip(2 * sizeof(double) * static_cast<size_t>(numel) + sizeof(int64_t) +
             sizeof(int32_t));
  }
  uint32_t mlen = r.Get<uint32_t>();
  std::string metadata(mlen, '\0');
  r.Read(metadata.data(), mlen);
  return metadata;
}

Var ModelCtx::P(const std::string& name) {
  auto it = cache.find(name);
  if (it != cache.end()) return it->second;
  ParamEntry& e = ps.Entry(name);
  Var v = g.Param(e.value, g.grad_enabled ? &e.grad : nullptr);
  cache.emplace(name, v);
  return v;
}

void InitTensor(Tensor& t, Init kind, Rng& rng, int64_t fan_in, int64_t fan_out) {
  switch (kind) {
    case Init::kZero:
      t.SetZero();
      break;
    case Init::kXavier: {
      double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = (2.0 * rng.Uniform() - 1.0) * limit;
      break;
    }
    case Init::kSmallNormal:
      for (int64_t i = 0; i < t.numel(); ++i) t[i] = 0.02 * rng.Normal();
      break;
  }
}

LinearLayer::LinearLayer(ParamStore& ps, Rng& rng, const std::string& prefix,
                         int64_t in, int64_t out, Init kind, bool bias)
    : wname_(prefix + "/w"), bname_(prefix + "/b"), bias_(bias) {
  Tensor& w = ps.Create(wname_, {in, out});
  InitTensor(w, kind, rng, in, out);
  if (bias_) ps.Create(bname_, {out});
}

Var LinearLayer::Forward(ModelCtx& ctx, Var x) const {
  Var b{};
  if (bias_) b = ctx.P(bname_);
  return ctx.g.Linear(x, ctx.P(wname_), b);
}

LayerNormLayer::LayerNormLayer(ParamStore& ps, const std::string& prefix,
                               int64_t dim)
    : gname_(prefix + "/gamma"), bname_(prefix + "/beta") {
  Tensor& g = ps.Create(gname_, {dim});
  g.Fill(1.0);
  ps.Create(bname_, {dim});
}

Var LayerNormLayer::Forward(ModelCtx& ctx, Var x) const {
  return ctx.g.LayerNorm(x, ctx.P(gname_), ctx.P(bname_), 1e-6);
}

WindowAttention::WindowAttention(ParamStore& ps, Rng& rng,
                                 const std::string& prefix, int grid_h,
                                 int grid_w, int dim, int heads, int window)
    : dim_(dim), heads_(heads), window_(window) {
  if (grid_h % window != 0 || grid_w % window != 0)
    throw Error("config: window " + std::to_string(window) +
                " does not tile grid " + std::to_string(grid_h) + "x" +
                std::to_string(grid_w));
  if (dim % heads != 0) throw Error("config: heads must divide embed dim");
  const int wy_n = grid_h / window, wx_n = grid_w / window;
  const int n_windows = wy_n * wx_n;
  wsize_ = static_cast<int64_t>(window) * window;
  dh_ = dim / heads;
  batches_ = static_cast<int64_t>(n_windows) * heads;
  tokens_ = static_cast<int64_t>(grid_h) * grid_w;

  qkv_ = LinearLayer(ps, rng, prefix + "/qkv", dim, 3 * dim);
  proj_ = LinearLayer(ps, rng, prefix + "/proj", dim, dim);
  bias_name_ = prefix + "/relbias";
  const int span = 2 * window - 1;
  ps.Create(bias_name_, {static_cast<int64_t>(heads), static_cast<int64_t>(span) * span});

  auto token_of = [&](int wdx, int p) {
    int wy = wdx / wx_n, wx = wdx % wx_n;
    int y = wy * window + p / window;
    int x = wx * window + p % window;
    return y * grid_w + x;
  };

  std::vector<int64_t> iq(batches_ * wsize_ * dh_), ik(iq.size()), iv(iq.size());
  for (int w = 0; w < n_windows; ++w)
    for (int h = 0; h < heads; ++h)
      for (int64_t p = 0; p < wsize_; ++p) {
        int64_t t = token_of(w, static_cast<int>(p));
        int64_t base = ((static_cast<int64_t>(w) * heads + h) * wsize_ + p) * dh_;
        for (int64_t d = 0; d < dh_; ++d) {
          int64_t col = static_cast<int64_t>(h) * dh_ + d;
          iq[base + d] = t * (3 * dim) + col;
          ik[base + d] = t * (3 * dim) + dim + col;
          iv[base + d] = t * (3 * dim) + 2 * dim + col;
        }
      }
  idx_q_ = MakeIndex(std::move(iq));
  idx_k_ = MakeIndex(std::move(ik));
  idx_v_ = MakeIndex(std::move(iv));

  std::vector<int64_t> ib(batches_ * wsize_ * wsize_);
  for (int64_t b = 0; b < batches_; ++b) {
    int h = static_cast<int>(b % heads);
    for (int64_t i = 0; i < wsize_; ++i)
      for (int64_t j = 0; j < wsize_; ++j) {
        int dy = static_cast<int>(i / window - j / window);
        int dx = static_cast<int>(i % window - j % window);
        int rel = (dy + window - 1) * span + (dx + window - 1);
        ib[(b * wsize_ + i) * wsize_ + j] =
            static_cast<int64_t>(h) * span * span + rel;
      }
  }
  idx_bias_ = MakeIndex(std::move(ib));

  std::vector<int64_t> im(tokens_ * dim);
  for (int w = 0; w < n_windows; ++w)
    for (int64_t p = 0; p < wsize_; ++p) {
      int64_t t = token_of(w, static_cast<int>(p));
      for (int h = 0; h < heads; ++h)
        for (int64_t d = 0; d < dh_; ++d)
          im[t * dim + h * dh_ + d] =
              ((static_cast<int64_t>(w) * heads + h) * wsize_ + p) * dh_ + d;
    }
  idx_merge_ = MakeIndex(std::move(im));
}

Var WindowAttention::Forward(ModelCtx& ctx, Var x) const {
  Graph& g = ctx.g;
  Var qkv = qkv_.Forward(ctx, x);
  Var q = g.Gather(qkv, idx_q_, {batches_, wsize_, dh_});
  Var k = g.Gather(qkv, idx_k_, {batches_, wsize_, dh_});
  Var v = g.Gather(qkv, idx_v_, {batches_, wsize_, dh_});
  Var scores = g.MulScalar(g.Bmm(q, k, false, true),
                           1.0 / std::sqrt(static_cast<double>(dh_)));
  Var bias = g.Gather(ctx.P(bias_name_), idx_bias_, {batches_, wsize_, wsize_});
  Var att = g.SoftmaxLast(g.Add(scores, bias));
  Var mixed = g.Bmm(att, v, false, false);
  Var merged = g.Gather(mixed, idx_merge_, {tokens_, dim_});
  return proj_.Forward(ctx, merged);
}

TransformerBlock::TransformerBlock(ParamStore& ps, Rng& rng,
                                   const std::string& prefix, int grid_h,
                                   int grid_w, int dim, int heads, int window,
                                   double mlp_ratio)
    : attn_(ps, rng, prefix + "/attn", grid_h, grid_w, dim, heads, window),
      ln_(ps, prefix + "/ln", dim) {
  int64_t hidden = static_cast<int64_t>(std::lround(mlp_ratio * dim));
  fc1_ = LinearLayer(ps, rng, prefix + "/mlp1", dim, hidden);
  fc2_ = LinearLayer(ps, rng, prefix + "/mlp2", hidden, dim);
}

Var TransformerBlock::Forward(ModelCtx& ctx, Var x) const {
  Graph& g = ctx.g;
  Var o1 = g.Add(x, attn_.Forward(ctx, x));
  Var h = fc2_.Forward(ctx, g.Gelu(fc1_.Forward(ctx, ln_.Forward(ctx, o1))));
  return g.Add(o1, h);
}

Conv3x3::Conv3x3(ParamStore& ps, Rng& rng, const std::string& prefix, int in_h,
                 int in_w, int in_ch, int out_ch, int stride, Init kind) {
  out_h_ = (in_h + 2 - 3) / stride + 1;
  out_w_ = (in_w + 2 - 3) / stride + 1;
  patch_ = 9 * static_cast<int64_t>(in_ch);
  kernel_ = LinearLayer(ps, rng, prefix, patch_, out_ch, kind);
  std::vector<int64_t> idx(static_cast<int64_t>(out_h_) * out_w_ * patch_);
  int64_t n = 0;
  for (int oy = 0; oy < out_h_; ++oy)
    for (int ox = 0; ox < out_w_; ++ox)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx)
          for (int c = 0; c < in_ch; ++c) {
            int y = oy * stride + ky - 1;
            int x = ox * stride + kx - 1;
            bool ok = y >= 0 && y < in_h && x >= 0 && x < in_w;
            idx[n++] = ok ? (static_cast<int64_t>(y) * in_w + x) * in_ch + c
                          : int64_t{-1};
          }
  im2col_ = MakeIndex(std::move(idx));
}

Var Conv3x3::Forward(ModelCtx& ctx, Var x) const {
  Var cols = ctx.g.Gather(x, im2col_,
                          {static_cast<int64_t>(out_h_) * out_w_, patch_});
  return kernel_.Forward(ctx, cols);
}

Var Upsample2x(ModelCtx& ctx, Var x, int h, int w) {
  int64_t ch = ctx.g.val(x).dim(1);
  return ctx.g.Gather(x, BuildUpsampleIndex(h, w, static_cast<int>(ch)),
                      {static_cast<int64_t>(4) * h * w, ch});
}

IndexArray BuildPatchEmbedIndex(int img_h, int img_w, int ch, int patch) {
  int gh = img_h / patch, gw = img_w / patch;
  std::vector<int64_t> idx(static_cast<int64_t>(gh) * gw * patch * patch * ch);
  int64_t n = 0;
  for (int ty = 0; ty < gh; ++ty)
    for (int tx = 0; tx < gw; ++tx)
      for (int py = 0; py < patch; ++py)
        for (int px = 0; px < patch; ++px)
          for (int c = 0; c < ch; ++c) {
            int64_t y = static_cast<int64_t>(ty) * patch + py;
            int64_t x = static_cast<int64_t>(tx) * patch + px;
            idx[n++] = (y * img_w + x) * ch + c;
          }
  return MakeIndex(std::move(idx));
}

IndexArray BuildPatchMergeIndex(int grid_h, int grid_w, int ch) {
  int gh = grid_h / 2, gw = grid_w / 2;
  std::vector<int64_t> idx(static_cast<int64_t>(gh) * gw * 4 * ch);
  int64_t n = 0;
  for (int ty = 0; ty < gh; ++ty)
    for (int tx = 0; tx < gw; ++tx)
      for (int q = 0; q < 4; ++q)
        for (int c = 0; c < ch; ++c) {
          int64_t y = static_cast<int64_t>(ty) * 2 + q / 2;
          int64_t x = static_cast<int64_t>(tx) * 2 + q % 2;
          idx[n++] = (y * grid_w + x) * ch + c;
        }
  return MakeIndex(std::move(idx));
}

IndexArray BuildPatchSplitIndex(int grid_h, int grid_w, int ch) {
  // Input: (grid_h*grid_w, 4*ch); output: (2*grid_h * 2*grid_w, ch).
  std::vector<int64_t> idx(static_cast<int64_t>(grid_h) * grid_w * 4 * ch);
  int64_t n = 0;
  for (int y = 0; y < 2 * grid_h; ++y)
    for (int x = 0; x < 2 * grid_w; ++x) {
      int q = (y % 2) * 2 + (x % 2);
      int64_t src = (static_cast<int64_t>(y / 2) * grid_w + x / 2) * 4 * ch +
                    static_cast<int64_t>(q) * ch;
      for (int c = 0; c < ch; ++c) idx[n++] = src + c;
    }
  return MakeIndex(std::move(idx));
}

IndexArray BuildUpsampleIndex(int h, int w, int ch) {
  std::vector<int64_t> idx(static_cast<int64_t>(4) * h * w * ch);
  int64_t n = 0;
  for (int y = 0; y < 2 * h; ++y)
    for (int x = 0; x < 2 * w; ++x)
      for (int c = 0; c < ch; ++c)
        idx[n++] = (static_cast<int64_t>(y / 2) * w + x / 2) * ch + c;
  return MakeIndex(std::move(idx));
}

}  // namespace ntscc
