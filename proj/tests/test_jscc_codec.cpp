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
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "ntscc/jscc_codec.hpp"
#include "ntscc/training_engine.hpp"

namespace ntscc {
namespace {

// 2x2 token grid, four bandwidth choices.
SystemConfig CodecConfig() {
  SystemConfig cfg;
  cfg.seed = 11;
  cfg.transform.embed_dim = 16;
  cfg.transform.heads = 4;
  cfg.transform.window = 2;
  cfg.transform.mlp_ratio = 2;
  cfg.rate.values = {2, 4, 6, 8};
  cfg.rate.kq = 2;
  cfg.codec.enc_blocks = 1;
  cfg.codec.dec_blocks = 1;
  cfg.codec.heads = 4;
  return cfg;
}

Tensor RandomTensor(std::vector<int64_t> dims, Rng& rng) {
  Tensor t(std::move(dims));
  for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.Normal();
  return t;
}

bool SameBits(const Tensor& a, const Tensor& b) {
  return a.numel() == b.numel() &&
         std::memcmp(a.data(), b.data(), a.numel() * sizeof(double)) == 0;
}

TEST_CASE("rate grouping partitions patches and tracks symbol offsets") {
  RateConfig rate;
  rate.values = {2, 4, 6, 8};
  const RateAllocation alloc = AllocationFromIndices({1, 0, 3, 1, 0}, rate);
  const RateGrouping grp = GroupByRate(alloc, 4);
  CHECK(grp.rows[0] == std::vector<int64_t>{1, 4});
  CHECK(grp.rows[1] == std::vector<int64_t>{0, 3});
  CHECK(grp.rows[2].empty());
  CHECK(grp.rows[3] == std::vector<int64_t>{2});
  CHECK(grp.present == std::vector<int>{0, 1, 3});
  CHECK(grp.patch_offset == std::vector<int64_t>{0, 4, 6, 14, 18});
  CHECK(grp.total_symbols == 20);
  CHECK(grp.total_symbols == alloc.total_symbols);
}

TEST_CASE("power normalization yields unit average symbol power") {
  Graph g;
  ParamStore ps;
  ModelCtx ctx(g, ps);
  Rng rng = Substream(12, "test/jscc", 0);
  Tensor s = RandomTensor({1, 64}, rng);
  for (int64_t i = 0; i < s.numel(); ++i) s.data()[i] *= 3.7;
  Var out = PowerNormalize(ctx, g.Input(s));
  const Tensor& v = g.val(out);
  double power = 0.0;
  for (int64_t i = 0; i < v.numel(); ++i) power += v.data()[i] * v.data()[i];
  power /= static_cast<double>(v.numel());
  CHECK(power == doctest::Approx(1.0).epsilon(1e-12));

  // All-zero symbols stay finite under the clamp guard.
  Var zero = PowerNormalize(ctx, g.Input(Tensor::Zeros({1, 8})));
  for (int64_t i = 0; i < 8; ++i) CHECK(g.val(zero).data()[i] == 0.0);
}

TEST_CASE("encoder emits patch-major symbols at the allocated widths") {
  SystemConfig cfg = CodecConfig();
  cfg.codec.enc_blocks = 0;  // head wiring visible without the mixer
  ParamStore ps;
  Rng rng = Substream(cfg.seed, "test/jscc", 1);
  JsccEncoder enc(ps, rng, cfg, 2, 2);

  const int c = cfg.transform.embed_dim;
  for (size_t r = 0; r < cfg.rate.values.size(); ++r) {
    const int v = cfg.rate.values[r];
    const std::string stem = "fe/head/r" + std::to_string(r);
    Tensor& w = ps.Value(stem + "/w");
    w.Fill(0.0);
    for (int j = 0; j < v; ++j) w.data()[0 * v + j] = 1.0;  // read channel 0
    Tensor& b = ps.Value(stem + "/b");
    for (int j = 0; j < v; ++j) b.data()[j] = static_cast<double>(j);
    ps.Value("fe/token/r" + std::to_string(r)).Fill(0.0);
  }

  const RateAllocation alloc = AllocationFromIndices({0, 1, 2, 1}, cfg.rate);
  REQUIRE(alloc.total_symbols == 16);
  Tensor y = Tensor::Zeros({4, c});
  for (int i = 0; i < 4; ++i) y.At(i, 0) = 10.0 * (i + 1);

  Graph g;
  ModelCtx ctx(g, ps);
  Var s = enc.Forward(ctx, g.Input(y), alloc);
  const Tensor& sv = g.val(s);
  REQUIRE(sv.dims() == std::vector<int64_t>{1, 16});
  // Patch i contributes [y_i0 + 0, y_i0 + 1, ...], in patch order.
  int64_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < alloc.symbols[i]; ++j) {
      CHECK(sv.data()[pos++] == doctest::Approx(10.0 * (i + 1) + j));
    }
  }
}

TEST_CASE("decoder routes symbol spans through the matching rate head") {
  SystemConfig cfg = CodecConfig();
  cfg.kind = ModelKind::kNtsccNoSideInfo;
  cfg.codec.dec_blocks = 0;
  ParamStore ps;
  Rng rng = Substream(cfg.seed, "test/jscc", 2);
  JsccDecoder dec(ps, rng, cfg, 2, 2);
  CHECK(!ps.Has("fd/refine/fc1/w"));

  const int c = cfg.transform.embed_dim;
  for (size_t r = 0; r < cfg.rate.values.size(); ++r) {
    const int v = cfg.rate.values[r];
    const std::string stem = "fd/head/r" + std::to_string(r);
    Tensor& w = ps.Value(stem + "/w");
    w.Fill(0.0);
    for (int j = 0; j < v; ++j) w.data()[j * c + 0] = 1.0;  // sum the span
    Tensor& b = ps.Value(stem + "/b");
    b.Fill(static_cast<double>(r + 1));
    Tensor& tok = ps.Value("fd/token/r" + std::to_string(r));
    tok.Fill(0.0);
    tok.data()[1] = 1000.0 * (r + 1);
  }

  const RateAllocation alloc = AllocationFromIndices({0, 1, 2, 1}, cfg.rate);
  Tensor s = Tensor::Zeros({1, alloc.total_symbols});
  for (int64_t i = 0; i < s.numel(); ++i) s.data()[i] = 1.0;

  Graph g;
  ModelCtx ctx(g, ps);
  Var out = dec.Forward(ctx, g.Input(s), alloc, Var{}, Var{});
  const Tensor& ov = g.val(out);
  REQUIRE(ov.dims() == std::vector<int64_t>{4, c});
  for (int i = 0; i < 4; ++i) {
    const int r = alloc.index[i];
    // Channel 0: span sum plus bias.  Channel 1: bias plus the rate token.
    CHECK(ov.At(i, 0) == doctest::Approx(alloc.symbols[i] + r + 1));
    CHECK(ov.At(i, 1) == doctest::Approx(r + 1 + 1000.0 * (r + 1)));
    CHECK(ov.At(i, 2) == doctest::Approx(r + 1.0));
  }
}

TEST_CASE("optimizer masking keeps unused rate heads bit-identical") {
  SystemConfig cfg = CodecConfig();
  ParamStore ps;
  Rng rng = Substream(cfg.seed, "test/jscc", 3);
  JsccEncoder enc(ps, rng, cfg, 2, 2);
  JsccDecoder dec(ps, rng, cfg, 2, 2);

  const int c = cfg.transform.embed_dim;
  Rng drng = Substream(13, "test/jscc", 4);
  const RateAllocation alloc = AllocationFromIndices({0, 2, 0, 2}, cfg.rate);

  Graph g;
  ModelCtx ctx(g, ps);
  Var y = g.Input(RandomTensor({4, c}, drng));
  Var mu = g.Input(Tensor::Zeros({4, c}));
  Var sigma = g.Input(Tensor::Full({4, c}, 1.0));
  Var s = PowerNormalize(ctx, enc.Forward(ctx, y, alloc));
  Var out = dec.Forward(ctx, s, alloc, mu, sigma);
  Var loss = g.MeanAll(g.Mul(out, out));
  g.Backward(loss);

  std::set<std::string> touched;
  for (const auto& [name, var] : ctx.cache) touched.insert(name);
  // Heads of absent rates never enter the graph; their tokens do (the token
  // stack is gathered from all rates) but carry the rate tag.
  CHECK(touched.count("fe/head/r0/w") == 1);
  CHECK(touched.count("fe/head/r1/w") == 0);
  CHECK(touched.count("fe/token/r1") == 1);

  const std::vector<std::string> masked = {"fe/head/r1/w", "fe/head/r3/b",
                                           "fd/head/r1/w", "fe/token/r1",
                                           "fd/token/r3"};
  std::vector<Tensor> before;
  for (const auto& n : masked) before.push_back(ps.Entry(n).value);

  AdamStep(ps, touched, {0, 2}, 1e-3);

  for (size_t i = 0; i < masked.size(); ++i) {
    const ParamEntry& e = ps.Entry(masked[i]);
    CHECK(SameBits(e.value, before[i]));
    CHECK(e.t == 0);
  }
  for (const std::string n :
       {"fe/head/r0/w", "fd/head/r2/w", "fe/token/r0", "fd/token/r2",
        "fe/blk0/attn/qkv/w", "fd/refine/fc1/w"}) {
    const ParamEntry& e = ps.Entry(n);
    CHECK(e.t == 1);
  }
  // A used head actually moved.
  const Tensor& moved = ps.Entry("fe/head/r0/w").value;
  Graph g2;
  ModelCtx ctx2(g2, ps);
  (void)ctx2;
  CHECK(moved.numel() == c * cfg.rate.values[0]);
}

TEST_CASE("adam updates change used parameters") {
  SystemConfig cfg = CodecConfig();
  ParamStore ps;
  Rng rng = Substream(7, "test/jscc", 5);
  JsccEncoder enc(ps, rng, cfg, 2, 2);
  const Tensor before = ps.Entry("fe/head/r0/w").value;

  Rng drng = Substream(8, "test/jscc", 6);
  const RateAllocation alloc = AllocationFromIndices({0, 0, 0, 0}, cfg.rate);
  Graph g;
  ModelCtx ctx(g, ps);
  Var s = enc.Forward(ctx, g.Input(RandomTensor({4, 16}, drng)), alloc);
  g.Backward(g.MeanAll(g.Mul(s, s)));
  std::set<std::string> touched;
  for (const auto& [name, var] : ctx.cache) touched.insert(name);
  AdamStep(ps, touched, {0}, 1e-3);
  CHECK(!SameBits(ps.Entry("fe/head/r0/w").value, before));
}

TEST_CASE("fixed-rate codec has a single head and no rate tokens") {
  SystemConfig cfg = CodecConfig();
  cfg.kind = ModelKind::kFixedJscc;
  cfg.fixed_rate_v = 6;
  ParamStore ps;
  Rng rng = Substream(cfg.seed, "test/jscc", 7);
  JsccEncoder enc(ps, rng, cfg, 2, 2);
  JsccDecoder dec(ps, rng, cfg, 2, 2);
  CHECK(!ps.Has("fe/token/r0"));
  CHECK(!ps.Has("fd/token/r0"));
  CHECK(!ps.Has("fe/head/r1/w"));
  CHECK(!ps.Has("fd/refine/fc1/w"));
  CHECK(ps.Has("fe/head/r0/w"));
  CHECK(ps.Value("fe/head/r0/w").dims() ==
        std::vector<int64_t>{cfg.transform.embed_dim, 6});

  const RateAllocation alloc = AllocateUniform(4, 6);
  Rng drng = Substream(9, "test/jscc", 8);
  Graph g;
  ModelCtx ctx(g, ps);
  Var s = enc.Forward(ctx, g.Input(RandomTensor({4, 16}, drng)), alloc);
  REQUIRE(g.val(s).dims() == std::vector<int64_t>{1, 24});
  Var out = dec.Forward(ctx, s, alloc, Var{}, Var{});
  REQUIRE(g.val(out).dims() == std::vector<int64_t>{4, 16});
  for (int64_t i = 0; i < g.val(out).numel(); ++i) {
    CHECK(std::isfinite(g.val(out).data()[i]));
  }
}

}  // namespace
}  // namespace ntscc
