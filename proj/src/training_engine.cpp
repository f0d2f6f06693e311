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

#include "ntscc/training_engine.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "ntscc/evaluation_metrics.hpp"
#include "ntscc/sideinfo_codec.hpp"

namespace ntscc {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kMseScale = 255.0 * 255.0;

Var Mse255(Graph& g, Var a, Var b) {
  Var d = g.Sub(g.Reshape(a, {g.val(a).numel()}),
                g.Reshape(b, {g.val(b).numel()}));
  return g.MulScalar(g.MeanAll(g.Mul(d, d)), kMseScale);
}

// Hyper latents arrive token-major (n, cz); the factorized density wants
// channel-major (cz, n).
Var TransposeToChannels(Graph& g, Var z, int64_t n, int64_t cz) {
  std::vector<int64_t> idx(cz * n);
  for (int64_t c = 0; c < cz; ++c) {
    for (int64_t t = 0; t < n; ++t) idx[c * n + t] = t * cz + c;
  }
  return g.Gather(z, MakeIndex(std::move(idx)), {cz, n});
}

Var DistortionExpr(ModelCtx& ctx, Var x, Var xhat, const System& sys) {
  if (sys.cfg.train.distortion == "msssim") {
    int scales = 0, window = 0;
    ChooseMsssimGeometry(sys.img_h, sys.img_w, &scales, &window);
    Var score = MsSsimExpr(ctx, x, xhat, sys.img_h, sys.img_w, scales, window);
    return ctx.g.AddScalar(ctx.g.MulScalar(score, -1.0), 1.0);
  }
  return Mse255(ctx.g, x, xhat);
}

void CheckFinite(const char* what, double v, const std::string& context) {
  if (!std::isfinite(v)) {
    throw Error("config: training diverged, " + std::string(what) +
                " is not finite (" + context + ")");
  }
}

std::vector<const SymbolTable*> HyperTableRefs(
    const std::vector<SymbolTable>& tables, int64_t n_tokens, int64_t cz) {
  std::vector<const SymbolTable*> refs(n_tokens * cz);
  for (int64_t i = 0; i < n_tokens * cz; ++i) {
    refs[i] = &tables[i % cz];
  }
  return refs;
}

std::vector<SymbolTable> BuildHyperTables(const System& sys) {
  const int cz = sys.cfg.transform.hyper_ch();
  std::vector<SymbolTable> tables;
  tables.reserve(cz);
  for (int c = 0; c < cz; ++c) {
    tables.push_back(BuildSymbolTable(
        sys.fz.PmfTable(sys.ps, c, -kZSupport, kZSupport), -kZSupport,
        kZSupport));
  }
  return tables;
}

}  // namespace

void AdamStep(ParamStore& ps, const std::set<std::string>& touched,
              const std::set<int>& used_rates, double lr) {
  for (const std::string& name : touched) {
    ParamEntry& e = ps.Entry(name);
    if (e.rate_tag >= 0 && used_rates.count(e.rate_tag) == 0) continue;
    e.t += 1;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(e.t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(e.t));
    for (int64_t i = 0; i < e.value.numel(); ++i) {
      const double g = e.grad[i];
      e.m[i] = kBeta1 * e.m[i] + (1.0 - kBeta1) * g;
      e.v[i] = kBeta2 * e.v[i] + (1.0 - kBeta2) * g * g;
      const double mh = e.m[i] / bc1;
      const double vh = e.v[i] / bc2;
      e.value[i] -= lr * mh / (std::sqrt(vh) + kAdamEps);
    }
  }
}

void ResetOptimizerState(ParamStore& ps) {
  for (auto& [name, e] : ps.entries()) {
    e.m.SetZero();
    e.v.SetZero();
    e.t = 0;
  }
}

Trainer::Trainer(System& sys, Dataset dataset)
    : sys_(sys), data_(std::move(dataset)) {
  if (data_.images.empty()) throw Error("config: empty training dataset");
  for (const auto& img : data_.images) {
    const auto& d = img.pixels.dims();
    if (d.size() != 3 || d[0] != sys_.img_h || d[1] != sys_.img_w ||
        d[2] != 3) {
      throw Error("config: dataset image " + img.id +
                  " does not match model geometry");
    }
  }
}

const SourceImage& Trainer::Pick(Rng& rng) const {
  return data_.images[rng.Below(data_.images.size())];
}

TrainLogEntry Trainer::NtcStep(int step) {
  const TrainConfig& tc = sys_.cfg.train;
  const int batch = tc.batch;
  const double cz_cap = CapacityBitsPerSymbol(tc.snr_db);
  const double m = static_cast<double>(sys_.source_dims());
  Rng data_rng = Substream(tc.seed, "data/ntc", static_cast<uint64_t>(step));

  sys_.ps.ZeroGrads();
  std::set<std::string> touched;
  TrainLogEntry e;
  e.phase = "ntc";
  e.step = step + 1;

  for (int i = 0; i < batch; ++i) {
    const uint64_t idx = static_cast<uint64_t>(step) * batch + i;
    const SourceImage& img = Pick(data_rng);
    Rng oy = Substream(tc.seed, "ntc/oy", idx);
    Rng oz = Substream(tc.seed, "ntc/oz", idx);

    Graph g;
    ModelCtx ctx(g, sys_.ps);
    Var x = g.Input(img.pixels);
    Var y = sys_.ga.Forward(ctx, x);
    Var ytil = g.Add(y, g.Input(NoiseLike(g.val(y), oy)));
    Var xhat = sys_.gs.Forward(ctx, ytil);
    Var d = DistortionExpr(ctx, x, xhat, sys_);

    Var loss = d;
    double bits_y_v = 0, bits_z_v = 0;
    if (sys_.has_hyper) {
      Var z = sys_.ha.Forward(ctx, y);
      Var ztil = g.Add(z, g.Input(NoiseLike(g.val(z), oz)));
      HyperSynthesis::MuSigma pr = sys_.hs.Forward(ctx, ztil);
      Var bits_y =
          g.SumAll(RateBits(ctx, GaussianUniformPmf(ctx, ytil, pr.mu, pr.sigma)));
      const int64_t nz = static_cast<int64_t>(sys_.z_h) * sys_.z_w;
      Var zt = TransposeToChannels(g, ztil, nz, sys_.cfg.transform.hyper_ch());
      Var bits_z = g.SumAll(RateBits(ctx, sys_.fz.BoxPmf(ctx, zt)));
      Var rate = g.MulScalar(
          g.Add(g.MulScalar(bits_y, sys_.cfg.rate.eta),
                g.MulScalar(bits_z, 1.0 / cz_cap)),
          tc.lambda / m);
      loss = g.Add(d, rate);
      bits_y_v = g.scalar(bits_y);
      bits_z_v = g.scalar(bits_z);
    }

    const double dv = g.scalar(d);
    const double lv = g.scalar(loss);
    std::ostringstream diag;
    diag << "step " << step << " image " << img.id << " d=" << dv
         << " bits_y=" << bits_y_v << " bits_z=" << bits_z_v;
    CheckFinite("loss", lv, diag.str());

    g.Backward(g.MulScalar(loss, 1.0 / batch));
    for (const auto& [name, var] : ctx.cache) touched.insert(name);

    e.loss += lv / batch;
    e.distortion_ntc += dv / batch;
    e.rate_y += sys_.cfg.rate.eta * bits_y_v / batch;
    e.rate_z += bits_z_v / cz_cap / batch;
  }

  AdamStep(sys_.ps, touched, {}, tc.lr);
  return e;
}

TrainLogEntry Trainer::NtsccStep(int step) {
  const TrainConfig& tc = sys_.cfg.train;
  const int batch = tc.batch;
  const double cz_cap = CapacityBitsPerSymbol(tc.snr_db);
  const double m = static_cast<double>(sys_.source_dims());
  Rng data_rng = Substream(tc.seed, "data/ntscc", static_cast<uint64_t>(step));

  sys_.ps.ZeroGrads();
  std::set<std::string> touched;
  std::set<int> used_rates;
  TrainLogEntry e;
  e.phase = "ntscc";
  e.step = step + 1;
  bool all_min = true, all_max = true;

  for (int i = 0; i < batch; ++i) {
    const uint64_t idx = static_cast<uint64_t>(step) * batch + i;
    const SourceImage& img = Pick(data_rng);
    Rng oy = Substream(tc.seed, "ntscc/oy", idx);
    Rng oz = Substream(tc.seed, "ntscc/oz", idx);
    Rng chan = Substream(tc.seed, "ntscc/chan", idx);

    Graph g;
    ModelCtx ctx(g, sys_.ps);
    Var x = g.Input(img.pixels);
    Var y = sys_.ga.Forward(ctx, x);

    RateAllocation alloc;
    Var bits_y, bits_z;
    HyperSynthesis::MuSigma pr;
    Var ytil;
    if (sys_.has_hyper) {
      ytil = g.Add(y, g.Input(NoiseLike(g.val(y), oy)));
      Var z = sys_.ha.Forward(ctx, y);
      Var ztil = g.Add(z, g.Input(NoiseLike(g.val(z), oz)));
      pr = sys_.hs.Forward(ctx, ztil);
      Var elem_bits = RateBits(ctx, GaussianUniformPmf(ctx, ytil, pr.mu, pr.sigma));
      Var patch_bits = g.RowSum(elem_bits);
      bits_y = g.SumAll(elem_bits);
      if (sys_.cfg.side_info()) {
        const int64_t nz = static_cast<int64_t>(sys_.z_h) * sys_.z_w;
        Var zt = TransposeToChannels(g, ztil, nz, sys_.cfg.transform.hyper_ch());
        bits_z = g.SumAll(RateBits(ctx, sys_.fz.BoxPmf(ctx, zt)));
      }

      // Bandwidth allocation reads the entropies as plain numbers; the graph
      // continues through the chosen heads.
      const Tensor& pb = g.val(patch_bits);
      std::vector<double> scaled(pb.numel());
      for (int64_t p = 0; p < pb.numel(); ++p) {
        scaled[p] = sys_.cfg.rate.eta * pb[p];
      }
      alloc = Allocate(scaled, sys_.cfg.rate);
    } else {
      alloc = AllocateUniform(sys_.num_patches(), sys_.cfg.fixed_rate_v);
    }
    for (int r : alloc.index) {
      used_rates.insert(r);
      if (r != 0) all_min = false;
      if (r != static_cast<int>(sys_.cfg.rate.values.size()) - 1) {
        all_max = false;
      }
    }

    Var s = sys_.fe.Forward(ctx, y, alloc);
    Var sn = PowerNormalize(ctx, s);
    Tensor noise =
        AwgnNoise({1, alloc.total_symbols}, tc.snr_db, chan);
    Var shat = g.Add(sn, g.Input(std::move(noise)));
    Var yhat = sys_.fd.Forward(ctx, shat, alloc, pr.mu, pr.sigma);
    Var xhat = sys_.gs.Forward(ctx, yhat);
    Var d1 = DistortionExpr(ctx, x, xhat, sys_);

    Var loss = d1;
    double d2v = 0, ky_til = 0, kz_til = 0;
    if (sys_.has_hyper) {
      Var xhat_ntc = sys_.gs.Forward(ctx, ytil);
      Var d2 = DistortionExpr(ctx, x, xhat_ntc, sys_);
      Var ktil = g.MulScalar(bits_y, sys_.cfg.rate.eta);
      if (sys_.cfg.side_info()) {
        ktil = g.Add(ktil, g.MulScalar(bits_z, 1.0 / cz_cap));
      }
      loss = g.Add(g.Add(d1, d2), g.MulScalar(ktil, tc.lambda / m));
      d2v = g.scalar(d2);
      ky_til = sys_.cfg.rate.eta * g.scalar(bits_y);
      kz_til = sys_.cfg.side_info() ? g.scalar(bits_z) / cz_cap : 0.0;
    }

    const double d1v = g.scalar(d1);
    const double lv = g.scalar(loss);
    std::ostringstream diag;
    diag << "step " << step << " image " << img.id << " d=" << d1v
         << " d_ntc=" << d2v << " k_y~=" << ky_til << " k_z~=" << kz_til;
    CheckFinite("loss", lv, diag.str());

    g.Backward(g.MulScalar(loss, 1.0 / batch));
    for (const auto& [name, var] : ctx.cache) touched.insert(name);

    e.loss += lv / batch;
    e.distortion += d1v / batch;
    e.distortion_ntc += d2v / batch;
    e.rate_y += ky_til / batch;
    e.rate_z += kz_til / batch;
    e.avg_ky += static_cast<double>(alloc.total_symbols) / batch;
  }

  if (sys_.cfg.rate_adaptive() && (all_min || all_max)) {
    std::cerr << "[ntscc] warning: allocation saturated at the "
              << (all_min ? "smallest" : "largest")
              << " bandwidth for the whole batch (step " << step + 1 << ")\n";
  }
  AdamStep(sys_.ps, touched, used_rates, tc.lr);
  return e;
}

void Trainer::PretrainNtc(int steps) {
  const int every = std::max(1, sys_.cfg.train.log_every);
  for (int s = 0; s < steps; ++s) {
    TrainLogEntry e = NtcStep(ntc_step_);
    ++ntc_step_;
    log_.push_back(e);
    if (e.step % every == 0 || s + 1 == steps) {
      std::printf("[ntc] step %d loss=%.5f d=%.5f ry=%.2f rz=%.2f\n", e.step,
                  e.loss, e.distortion_ntc, e.rate_y, e.rate_z);
      std::fflush(stdout);
    }
  }
}

void Trainer::TrainNtscc(int steps) {
  if (ntscc_step_ == 0 && steps > 0) ResetOptimizerState(sys_.ps);
  const int every = std::max(1, sys_.cfg.train.log_every);
  for (int s = 0; s < steps; ++s) {
    TrainLogEntry e = NtsccStep(ntscc_step_);
    ++ntscc_step_;
    log_.push_back(e);
    if (e.step % every == 0 || s + 1 == steps) {
      std::printf(
          "[ntscc] step %d loss=%.5f d=%.5f d_ntc=%.5f ky~=%.2f kz~=%.2f "
          "ky=%.1f\n",
          e.step, e.loss, e.distortion, e.distortion_ntc, e.rate_y, e.rate_z,
          e.avg_ky);
      std::fflush(stdout);
    }
  }
}

std::string Trainer::ProgressNote() const {
  std::ostringstream os;
  os << "ntc_step=" << ntc_step_ << ";ntscc_step=" << ntscc_step_;
  return os.str();
}

void Trainer::ParseProgressNote(const std::string& note) {
  int a = 0, b = 0;
  if (std::sscanf(note.c_str(), "ntc_step=%d;ntscc_step=%d", &a, &b) == 2) {
    ntc_step_ = a;
    ntscc_step_ = b;
  }
}

EncodeResult AliceEncode(System& sys, const Tensor& image, double snr_db,
                         double eta_override) {
  const auto& d = image.dims();
  if (d.size() != 3 || d[0] != sys.img_h || d[1] != sys.img_w || d[2] != 3) {
    throw Error("shape: image does not match model geometry");
  }
  Graph g;
  g.grad_enabled = false;
  ModelCtx ctx(g, sys.ps);
  Var x = g.Input(image);
  Var y = sys.ga.Forward(ctx, x);

  EncodeResult res;
  const int l = sys.num_patches();
  if (sys.has_hyper) {
    Var z = sys.ha.Forward(ctx, y);
    const Tensor& zv = g.val(z);
    Tensor zbar(zv.dims());
    for (int64_t i = 0; i < zv.numel(); ++i) {
      double q = std::round(zv[i]);
      if (q > kZSupport || q < -kZSupport) {
        ++res.clamped;
        q = q > 0 ? kZSupport : -kZSupport;
      }
      zbar[i] = q;
    }
    if (res.clamped > 0) {
      std::cerr << "[encode] warning: " << res.clamped
                << " hyper symbols clipped into the coder support\n";
    }
    HyperSynthesis::MuSigma pr = sys.hs.Forward(ctx, g.Input(zbar));

    // The receiver can only reproduce entropies of the quantized latents, so
    // the allocation is computed from them as well and shipped as the rate
    // map.
    Tensor ybar(g.val(y).dims());
    for (int64_t i = 0; i < ybar.numel(); ++i) {
      ybar[i] = std::round(g.val(y)[i]);
    }
    Var bits = RateBits(
        ctx, GaussianUniformPmf(ctx, g.Input(std::move(ybar)), pr.mu, pr.sigma));
    const Tensor& pb = g.val(g.RowSum(bits));
    const double eta = eta_override > 0 ? eta_override : sys.cfg.rate.eta;
    std::vector<double> scaled(pb.numel());
    for (int64_t p = 0; p < pb.numel(); ++p) scaled[p] = eta * pb[p];
    res.alloc = Allocate(scaled, sys.cfg.rate);

    if (sys.cfg.side_info()) {
      const std::vector<SymbolTable> tables = BuildHyperTables(sys);
      const int64_t nz = static_cast<int64_t>(sys.z_h) * sys.z_w;
      const int cz = sys.cfg.transform.hyper_ch();
      std::vector<int32_t> symbols(zbar.numel());
      for (int64_t i = 0; i < zbar.numel(); ++i) {
        symbols[i] = static_cast<int32_t>(zbar[i]);
      }
      res.tx.z_stream = RangeEncode(symbols, HyperTableRefs(tables, nz, cz));
    }
  } else {
    res.alloc = AllocateUniform(l, sys.cfg.fixed_rate_v);
  }

  Var s = sys.fe.Forward(ctx, y, res.alloc);
  Var sn = PowerNormalize(ctx, s);
  const Tensor& sv = g.val(sn);
  res.tx.symbols.assign(sv.data(), sv.data() + sv.numel());

  res.tx.grid_h = static_cast<uint32_t>(sys.grid_h);
  res.tx.grid_w = static_cast<uint32_t>(sys.grid_w);
  if (sys.cfg.rate_adaptive()) {
    res.tx.kq = static_cast<uint32_t>(sys.cfg.rate.kq);
    for (int v : sys.cfg.rate.values) {
      res.tx.rate_values.push_back(static_cast<uint32_t>(v));
    }
    res.tx.rate_map = PackRateMap(res.alloc, sys.cfg.rate.kq);
  } else {
    res.tx.kq = 0;
    res.tx.rate_values = {static_cast<uint32_t>(sys.cfg.fixed_rate_v)};
  }
  res.tx.snr_milli_db = static_cast<int32_t>(std::llround(snr_db * 1000.0));

  const double cap = CapacityBitsPerSymbol(snr_db);
  res.ledger.ky = static_cast<double>(res.alloc.total_symbols);
  res.ledger.kz = sys.cfg.side_info()
                      ? static_cast<double>(res.tx.z_stream.size()) * 8.0 / cap
                      : 0.0;
  res.ledger.kr = sys.cfg.rate_adaptive()
                      ? static_cast<double>(l) * sys.cfg.rate.kq / cap
                      : 0.0;
  return res;
}

DecodeResult BobDecode(System& sys, const Transmission& tx, Rng& channel_rng) {
  if (tx.grid_h != static_cast<uint32_t>(sys.grid_h) ||
      tx.grid_w != static_cast<uint32_t>(sys.grid_w)) {
    throw Error("framing: transmission grid does not match model geometry");
  }
  std::vector<uint32_t> expect;
  if (sys.cfg.rate_adaptive()) {
    for (int v : sys.cfg.rate.values) expect.push_back(v);
  } else {
    expect = {static_cast<uint32_t>(sys.cfg.fixed_rate_v)};
  }
  if (tx.rate_values != expect) {
    throw Error("framing: transmission bandwidth set does not match model");
  }
  const uint32_t want_kq = sys.cfg.rate_adaptive() ? sys.cfg.rate.kq : 0;
  if (tx.kq != want_kq) {
    throw Error("framing: transmission rate map width does not match model");
  }
  if (sys.cfg.side_info() == tx.z_stream.empty()) {
    throw Error(sys.cfg.side_info()
                    ? "framing: missing hyper stream"
                    : "framing: unexpected hyper stream");
  }

  const int l = sys.num_patches();
  DecodeResult res;
  if (tx.kq > 0) {
    res.alloc = AllocationFromIndices(
        UnpackRateMap(tx.rate_map, l, static_cast<int>(tx.kq)), sys.cfg.rate);
  } else {
    res.alloc = AllocateUniform(l, static_cast<int>(tx.rate_values[0]));
  }
  if (static_cast<int64_t>(tx.symbols.size()) != res.alloc.total_symbols) {
    throw Error("framing: symbol count does not match the rate map");
  }

  const double snr_db = tx.snr_milli_db / 1000.0;
  Tensor noisy({1, res.alloc.total_symbols});
  Tensor noise = AwgnNoise({1, res.alloc.total_symbols}, snr_db, channel_rng);
  for (int64_t i = 0; i < noisy.numel(); ++i) {
    noisy[i] = tx.symbols[i] + noise[i];
  }

  Graph g;
  g.grad_enabled = false;
  ModelCtx ctx(g, sys.ps);
  HyperSynthesis::MuSigma pr;
  if (sys.cfg.side_info()) {
    const std::vector<SymbolTable> tables = BuildHyperTables(sys);
    const int64_t nz = static_cast<int64_t>(sys.z_h) * sys.z_w;
    const int cz = sys.cfg.transform.hyper_ch();
    const std::vector<int32_t> symbols =
        RangeDecode(tx.z_stream, HyperTableRefs(tables, nz, cz));
    Tensor zbar({nz, cz});
    for (int64_t i = 0; i < zbar.numel(); ++i) {
      zbar[i] = static_cast<double>(symbols[i]);
    }
    pr = sys.hs.Forward(ctx, g.Input(std::move(zbar)));
  }

  Var yhat = sys.fd.Forward(ctx, g.Input(noisy), res.alloc, pr.mu, pr.sigma);
  Var xr = sys.gs.Forward(ctx, yhat);
  const Tensor& xv = g.val(xr);
  Tensor out({sys.img_h, sys.img_w, 3});
  for (int64_t i = 0; i < out.numel(); ++i) {
    out[i] = std::min(1.0, std::max(0.0, xv[i]));
  }
  res.reconstruction = std::move(out);
  return res;
}

TransmitResult Transmit(System& sys, const Tensor& image, double snr_db,
                        Rng& channel_rng, double eta_override) {
  EncodeResult enc = AliceEncode(sys, image, snr_db, eta_override);
  TransmitResult res;
  res.wire = SerializeTransmission(enc.tx);
  const Transmission parsed = ParseTransmission(res.wire);
  DecodeResult dec = BobDecode(sys, parsed, channel_rng);
  res.reconstruction = std::move(dec.reconstruction);
  res.alloc = std::move(dec.alloc);
  res.ledger = enc.ledger;
  res.clamped = enc.clamped;
  return res;
}

}  // namespace ntscc
