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
#include <filesystem>
#include <string>
#include <vector>

#include "ntscc/training_engine.hpp"

namespace ntscc {
namespace {

namespace fs = std::filesystem;

SystemConfig TrainTestConfig() {
  Config c = Config::FromText(
      "seed=31\n"
      "transform.embed_dim=16\n"
      "transform.heads=4\n"
      "transform.window=4\n"
      "transform.stages=2\n"
      "transform.blocks=1,1\n"
      "rate.values=2,4,6,8\n"
      "rate.kq=2\n"
      "codec.enc_blocks=1\n"
      "codec.dec_blocks=1\n"
      "codec.heads=4\n"
      "dataset.crop=16\n"
      "eval.crop=16\n"
      "dataset.count=4\n"
      "train.batch=2\n"
      "train.lr=1e-3\n"
      "train.lambda=16\n");
  return SystemConfig::FromConfig(c);
}

Dataset TrainData(const SystemConfig& cfg) {
  return LoadDataset(cfg.dataset, cfg.transform.downsample());
}

bool StoresMatchBitwise(const ParamStore& a, const ParamStore& b) {
  if (a.NumTensors() != b.NumTensors()) return false;
  auto ita = a.entries().begin();
  auto itb = b.entries().begin();
  for (; ita != a.entries().end(); ++ita, ++itb) {
    if (ita->first != itb->first) return false;
    const ParamEntry& ea = ita->second;
    const ParamEntry& eb = itb->second;
    if (ea.t != eb.t) return false;
    auto same = [](const Tensor& x, const Tensor& y) {
      return x.numel() == y.numel() &&
             std::memcmp(x.data(), y.data(), x.numel() * sizeof(double)) == 0;
    };
    if (!same(ea.value, eb.value) || !same(ea.m, eb.m) || !same(ea.v, eb.v)) {
      return false;
    }
  }
  return true;
}

TEST_CASE("checkpoints restore parameters and progress bit-identically") {
  const fs::path dir = fs::temp_directory_path() / "ntscc_train_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();

  SystemConfig cfg = TrainTestConfig();
  System sys(cfg, 16, 16);
  Trainer tr(sys, TrainData(cfg));
  tr.PretrainNtc(2);
  sys.SaveCheckpoint(path, tr.ProgressNote());

  System fresh(cfg, 16, 16);
  CHECK(!StoresMatchBitwise(sys.ps, fresh.ps));  // training moved something
  const std::string note = fresh.LoadCheckpoint(path);
  CHECK(StoresMatchBitwise(sys.ps, fresh.ps));
  Trainer tr2(fresh, TrainData(cfg));
  tr2.ParseProgressNote(note);
  CHECK(tr2.ntc_step() == 2);
  CHECK(tr2.ntscc_step() == 0);

  SystemConfig other = cfg;
  other.transform.embed_dim = 32;
  other.codec.heads = 8;
  other.transform.heads = 8;
  System mismatched(other, 16, 16);
  CHECK_THROWS_WITH_AS(mismatched.LoadCheckpoint(path),
                       doctest::Contains("architecture"), Error);
  fs::remove_all(dir);
}

TEST_CASE("progress notes roundtrip") {
  SystemConfig cfg = TrainTestConfig();
  System sys(cfg, 16, 16);
  Trainer tr(sys, TrainData(cfg));
  tr.ParseProgressNote("ntc_step=7;ntscc_step=3");
  CHECK(tr.ntc_step() == 7);
  CHECK(tr.ntscc_step() == 3);
  CHECK(tr.ProgressNote().find("ntc_step=7") != std::string::npos);
  CHECK(tr.ProgressNote().find("ntscc_step=3") != std::string::npos);
}

TEST_CASE("source-coding pretraining reduces its loss") {
  SystemConfig cfg = TrainTestConfig();
  System sys(cfg, 16, 16);
  Trainer tr(sys, TrainData(cfg));
  tr.PretrainNtc(30);
  REQUIRE(tr.log().size() == 30);
  double head = 0, tail = 0;
  for (int i = 0; i < 5; ++i) {
    head += tr.log()[i].loss / 5.0;
    tail += tr.log()[25 + i].loss / 5.0;
  }
  CHECK(tail < head);
  for (const auto& e : tr.log()) {
    CHECK(e.phase == "ntc");
    CHECK(std::isfinite(e.loss));
    CHECK(e.rate_y >= 0.0);
  }
}

TEST_CASE("joint training logs finite losses and allocation stats") {
  SystemConfig cfg = TrainTestConfig();
  System sys(cfg, 16, 16);
  Trainer tr(sys, TrainData(cfg));
  tr.PretrainNtc(4);
  tr.TrainNtscc(4);
  CHECK(tr.ntc_step() == 4);
  CHECK(tr.ntscc_step() == 4);
  REQUIRE(tr.log().size() == 8);
  for (size_t i = 4; i < 8; ++i) {
    const TrainLogEntry& e = tr.log()[i];
    CHECK(e.phase == "ntscc");
    CHECK(std::isfinite(e.loss));
    CHECK(e.avg_ky > 0.0);
    // 16 patches, bandwidth choices in [2, 8].
    CHECK(e.avg_ky >= 16 * 2);
    CHECK(e.avg_ky <= 16 * 8);
  }
}

TEST_CASE("transmission accounts bandwidth exactly and decodes in range") {
  SystemConfig cfg = TrainTestConfig();
  System sys(cfg, 16, 16);
  Trainer tr(sys, TrainData(cfg));
  tr.PretrainNtc(6);
  tr.TrainNtscc(2);

  const Tensor img = SynthTexture(71, 16, 4).pixels;
  Rng chan = Substream(5, "test/chan", 0);
  const TransmitResult res = Transmit(sys, img, 10.0, chan);
  CHECK(res.reconstruction.dims() == std::vector<int64_t>{16, 16, 3});
  for (int64_t i = 0; i < res.reconstruction.numel(); ++i) {
    CHECK(res.reconstruction.data()[i] >= 0.0);
    CHECK(res.reconstruction.data()[i] <= 1.0);
  }
  const double cap = CapacityBitsPerSymbol(10.0);
  CHECK(res.ledger.ky == static_cast<double>(res.alloc.total_symbols));
  // Rate map: 16 patches at 2 bits each, charged at channel capacity.
  CHECK(res.ledger.kr == doctest::Approx(16 * 2 / cap).epsilon(1e-12));
  // The hyper link is a whole number of range-coded bytes.
  const double zbytes = res.ledger.kz * cap / 8.0;
  CHECK(zbytes > 0.0);
  CHECK(std::abs(zbytes - std::round(zbytes)) < 1e-9);
  CHECK(Cbr(res.ledger, 16 * 16 * 3) ==
        doctest::Approx(res.ledger.total() / 768.0).epsilon(1e-12));
  CHECK(!res.wire.empty());

  // Alice and Bob agree on the allocation through the wire format.
  const EncodeResult enc = AliceEncode(sys, img, 10.0);
  Rng chan2 = Substream(5, "test/chan", 1);
  const DecodeResult dec = BobDecode(sys, enc.tx, chan2);
  CHECK(dec.alloc.index == enc.alloc.index);
  CHECK(dec.alloc.total_symbols == enc.alloc.total_symbols);
}

TEST_CASE("ablated models drop their side links from the ledger") {
  SystemConfig nosi = TrainTestConfig();
  nosi.kind = ModelKind::kNtsccNoSideInfo;
  System sys_nosi(nosi, 16, 16);
  Rng chan = Substream(6, "test/chan", 0);
  const Tensor img = SynthTexture(72, 16, 4).pixels;
  const TransmitResult rn = Transmit(sys_nosi, img, 10.0, chan);
  CHECK(rn.ledger.kz == 0.0);
  CHECK(rn.ledger.kr > 0.0);
  CHECK(rn.ledger.ky == static_cast<double>(rn.alloc.total_symbols));

  SystemConfig fixed = TrainTestConfig();
  fixed.kind = ModelKind::kFixedJscc;
  fixed.fixed_rate_v = 4;
  System sys_fixed(fixed, 16, 16);
  const TransmitResult rf = Transmit(sys_fixed, img, 10.0, chan);
  CHECK(rf.ledger.kz == 0.0);
  CHECK(rf.ledger.kr == 0.0);
  CHECK(rf.ledger.ky == 16.0 * 4.0);
  CHECK(rf.alloc.total_symbols == 64);
}

TEST_CASE("interrupted training resumes bit-identically") {
  const fs::path dir = fs::temp_directory_path() / "ntscc_train_resume";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();

  SystemConfig cfg = TrainTestConfig();
  System a(cfg, 16, 16);
  Trainer ta(a, TrainData(cfg));
  ta.PretrainNtc(4);
  a.SaveCheckpoint(path, ta.ProgressNote());
  ta.PretrainNtc(3);

  System b(cfg, 16, 16);
  const std::string note = b.LoadCheckpoint(path);
  Trainer tb(b, TrainData(cfg));
  tb.ParseProgressNote(note);
  tb.PretrainNtc(3);

  CHECK(StoresMatchBitwise(a.ps, b.ps));
  CHECK(ta.ntc_step() == tb.ntc_step());

  // The same holds across the joint phase.
  ta.TrainNtscc(2);
  a.SaveCheckpoint(path, ta.ProgressNote());
  ta.TrainNtscc(2);
  System c(cfg, 16, 16);
  const std::string note2 = c.LoadCheckpoint(path);
  Trainer tc(c, TrainData(cfg));
  tc.ParseProgressNote(note2);
  tc.TrainNtscc(2);
  CHECK(StoresMatchBitwise(a.ps, c.ps));
  fs::remove_all(dir);
}

TEST_CASE("optimizer state resets to zero") {
  SystemConfig cfg = TrainTestConfig();
  System sys(cfg, 16, 16);
  Trainer tr(sys, TrainData(cfg));
  tr.PretrainNtc(2);
  bool any_moment = false;
  for (const auto& [name, e] : sys.ps.entries()) {
    for (int64_t i = 0; i < e.m.numel() && !any_moment; ++i) {
      any_moment = e.m.data()[i] != 0.0;
    }
  }
  CHECK(any_moment);
  ResetOptimizerState(sys.ps);
  for (const auto& [name, e] : sys.ps.entries()) {
    CHECK(e.t == 0);
    for (int64_t i = 0; i < e.m.numel(); ++i) {
      CHECK(e.m.data()[i] == 0.0);
      CHECK(e.v.data()[i] == 0.0);
    }
  }
}

}  // namespace
}  // namespace ntscc
