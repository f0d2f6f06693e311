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

// Command-line entry point: train models, evaluate rate-distortion points,
// push single images through the simulated link, dump per-patch rate maps
// and orchestrate lambda/SNR sweeps.  Every run prints the canonical config
// hash and the seeds in play so any CSV row can be reproduced bit-identically
// from the command line alone.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "ntscc/channel_sim.hpp"
#include "ntscc/evaluation_metrics.hpp"
#include "ntscc/image_io.hpp"
#include "ntscc/model.hpp"
#include "ntscc/rng.hpp"
#include "ntscc/source_pipeline.hpp"
#include "ntscc/training_engine.hpp"

namespace ntscc {
namespace {

namespace fs = std::filesystem;

struct RunOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out = "out";
  std::string checkpoint;
  std::string image;
  std::string self;  // argv[0], for sweep workers
  std::vector<std::string> lambdas;
  std::vector<std::string> snrs;
};

// Shared flags.  The numeric conveniences (--seed etc.) are folded into the
// override list so they go through the same parsing as --set.
void AddCommonFlags(CLI::App* sub, RunOpts* o) {
  sub->add_option("--config", o->config_path, "config file (key=value lines)");
  sub->add_option("--set", o->sets, "override, key=value (repeatable)")
      ->allow_extra_args(false);
  sub->add_option("--out", o->out, "output directory");
  sub->add_option("--checkpoint", o->checkpoint, "checkpoint path");
  auto fold = [o](const std::string& key) {
    return [o, key](const std::string& v) { o->sets.push_back(key + "=" + v); };
  };
  sub->add_option_function<std::string>("--seed", fold("seed"), "master seed");
  sub->add_option_function<std::string>("--snr", fold("snr_db"),
                                        "channel SNR in dB");
  sub->add_option_function<std::string>("--lambda", fold("train.lambda"),
                                        "rate-distortion tradeoff");
  sub->add_option_function<std::string>("--eta", fold("rate.eta"),
                                        "bits-to-symbols scale");
}

Config LoadConfig(const RunOpts& o) {
  Config c = o.config_path.empty() ? Config::FromText("")
                                   : Config::FromFile(o.config_path);
  for (const std::string& kv : o.sets) c.SetKv(kv);
  return c;
}

std::string CheckpointHashHex(const std::string& path) {
  // The trailing 8 bytes of a checkpoint are the FNV-1a of the rest.
  const std::vector<uint8_t> b = ReadFileBytes(path);
  if (b.size() < 8) throw Error("io: truncated checkpoint " + path);
  uint64_t h;
  std::memcpy(&h, b.data() + b.size() - 8, 8);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void WriteTextAtomic(const std::string& path, const std::string& text) {
  WriteFileAtomic(path, std::vector<uint8_t>(text.begin(), text.end()));
}

void LogRunHeader(const char* cmd, const Config& c, const SystemConfig& cfg) {
  std::printf(
      "[%s] config_hash=%016llx model=%s seed=%llu dataset.seed=%llu "
      "eval.seed=%llu train.seed=%llu\n",
      cmd, static_cast<unsigned long long>(c.Hash()),
      ModelKindName(cfg.kind).c_str(),
      static_cast<unsigned long long>(cfg.seed),
      static_cast<unsigned long long>(cfg.dataset.seed),
      static_cast<unsigned long long>(cfg.eval_dataset.seed),
      static_cast<unsigned long long>(cfg.train.seed));
}

// Folder datasets may live under $NTSCC_CACHE; a relative folder that does
// not exist beside the working directory is searched there as well.
SystemConfig ResolveDatasetPaths(SystemConfig cfg) {
  const char* cache = std::getenv("NTSCC_CACHE");
  if (cache == nullptr) return cfg;
  auto fix = [cache](DatasetSpec& d) {
    if (d.kind != "folder" || d.folder.empty()) return;
    if (fs::exists(d.folder)) return;
    const fs::path alt = fs::path(cache) / d.folder;
    if (fs::exists(alt)) d.folder = alt.string();
  };
  fix(cfg.dataset);
  fix(cfg.eval_dataset);
  return cfg;
}

std::string TrainLogCsv(const std::vector<TrainLogEntry>& log) {
  std::ostringstream out;
  out << "phase,step,loss,distortion,distortion_ntc,rate_y,rate_z,avg_ky\n";
  char line[256];
  for (const TrainLogEntry& e : log) {
    std::snprintf(line, sizeof(line), "%s,%d,%.6f,%.6f,%.6f,%.4f,%.4f,%.3f\n",
                  e.phase.c_str(), e.step, e.loss, e.distortion,
                  e.distortion_ntc, e.rate_y, e.rate_z, e.avg_ky);
    out << line;
  }
  return out.str();
}

// Trains the quantized-autoencoder phase, and the joint phase as well when
// `joint` is set.  Picks up from --checkpoint (or <out>/model.ckpt) when one
// exists, replaying the remaining steps bit-identically.
int RunTrain(const RunOpts& o, bool joint) {
  const Config c = LoadConfig(o);
  SystemConfig cfg = SystemConfig::FromConfig(c);
  cfg.Validate();
  cfg = ResolveDatasetPaths(cfg);
  LogRunHeader(joint ? "train" : "pretrain", c, cfg);

  fs::create_directories(o.out);
  const std::string ckpt =
      o.checkpoint.empty() ? o.out + "/model.ckpt" : o.checkpoint;

  System sys(cfg, cfg.dataset.crop, cfg.dataset.crop);
  Trainer trainer(sys, LoadDataset(cfg.dataset, cfg.transform.downsample()));
  if (fs::exists(ckpt)) {
    trainer.ParseProgressNote(sys.LoadCheckpoint(ckpt));
    std::printf("[resume] %s hash=%s ntc_step=%d ntscc_step=%d\n",
                ckpt.c_str(), CheckpointHashHex(ckpt).c_str(),
                trainer.ntc_step(), trainer.ntscc_step());
  }

  const int ntc_left = cfg.train.steps_ntc - trainer.ntc_step();
  if (ntc_left > 0) trainer.PretrainNtc(ntc_left);
  if (joint) {
    const int ntscc_left = cfg.train.steps_ntscc - trainer.ntscc_step();
    if (ntscc_left > 0) trainer.TrainNtscc(ntscc_left);
  }

  sys.SaveCheckpoint(ckpt, trainer.ProgressNote());
  WriteTextAtomic(o.out + "/train_log.csv", TrainLogCsv(trainer.log()));
  std::printf("[done] checkpoint=%s hash=%s ntc_step=%d ntscc_step=%d\n",
              ckpt.c_str(), CheckpointHashHex(ckpt).c_str(),
              trainer.ntc_step(), trainer.ntscc_step());
  return 0;
}

System LoadSystem(const SystemConfig& cfg, int h, int w, const RunOpts& o,
                  bool require_checkpoint) {
  System sys(cfg, h, w);
  if (!o.checkpoint.empty()) {
    sys.LoadCheckpoint(o.checkpoint);
    std::printf("[checkpoint] %s hash=%s\n", o.checkpoint.c_str(),
                CheckpointHashHex(o.checkpoint).c_str());
  } else if (require_checkpoint) {
    throw Error("config: this command needs --checkpoint");
  }
  return sys;
}

// Averages one rate-distortion point over the held-out set and appends it to
// <out>/rd.csv (the file is rewritten atomically with all rows).
int RunEval(const RunOpts& o) {
  const Config c = LoadConfig(o);
  SystemConfig cfg = SystemConfig::FromConfig(c);
  cfg.Validate();
  cfg = ResolveDatasetPaths(cfg);
  LogRunHeader("eval", c, cfg);

  const Dataset data = LoadDataset(cfg.eval_dataset, cfg.transform.downsample());
  if (data.images.empty()) throw Error("config: eval dataset is empty");
  const int crop = cfg.eval_dataset.crop;
  System sys = LoadSystem(cfg, crop, crop, o, /*require_checkpoint=*/true);

  int scales, window;
  ChooseMsssimGeometry(crop, crop, &scales, &window);
  RdPoint p;
  p.model = ModelKindName(cfg.kind);
  p.lambda = cfg.train.lambda;
  p.eta = cfg.rate.eta;
  p.snr_db = cfg.snr_db;
  p.seed = cfg.seed;
  const int64_t m = sys.source_dims();
  for (size_t i = 0; i < data.images.size(); ++i) {
    Rng chan = Substream(cfg.eval_dataset.seed, "eval/chan", i);
    const TransmitResult r =
        Transmit(sys, data.images[i].pixels, cfg.snr_db, chan);
    p.cbr_total += Cbr(r.ledger, m);
    p.cbr_y += r.ledger.ky / static_cast<double>(m);
    p.cbr_z += r.ledger.kz / static_cast<double>(m);
    p.cbr_ratemap += r.ledger.kr / static_cast<double>(m);
    p.psnr_db += Psnr(data.images[i].pixels, r.reconstruction);
    p.msssim += MsSsim(data.images[i].pixels, r.reconstruction, scales, window);
  }
  const double n = static_cast<double>(data.images.size());
  p.cbr_total /= n;
  p.cbr_y /= n;
  p.cbr_z /= n;
  p.cbr_ratemap /= n;
  p.psnr_db /= n;
  p.msssim /= n;
  p.msssim_db = ToDb(p.msssim);

  fs::create_directories(o.out);
  const std::string csv = RdCsvHeader() + "\n" + RdCsvLine(p) + "\n";
  WriteTextAtomic(o.out + "/rd.csv", csv);
  std::printf("%s", csv.c_str());
  return 0;
}

Tensor LoadInputImage(const SystemConfig& cfg, const RunOpts& o) {
  if (!o.image.empty()) return ReadImage(o.image);
  const Dataset data = LoadDataset(cfg.eval_dataset, cfg.transform.downsample());
  if (data.images.empty()) throw Error("config: eval dataset is empty");
  return data.images[0].pixels;
}

// One image through the full wire: serialize, add channel noise, decode.
// Prints the bandwidth ledger and writes the wire file plus reconstruction.
int RunTransmit(const RunOpts& o) {
  const Config c = LoadConfig(o);
  SystemConfig cfg = SystemConfig::FromConfig(c);
  cfg.Validate();
  cfg = ResolveDatasetPaths(cfg);
  LogRunHeader("transmit", c, cfg);

  const Tensor img = LoadInputImage(cfg, o);
  System sys = LoadSystem(cfg, static_cast<int>(img.dims()[0]),
                          static_cast<int>(img.dims()[1]), o,
                          /*require_checkpoint=*/false);
  Rng chan = Substream(cfg.seed, "cli/chan", 0);
  const TransmitResult r = Transmit(sys, img, cfg.snr_db, chan);

  fs::create_directories(o.out);
  WriteFileAtomic(o.out + "/transmission.bin", r.wire);
  WritePng(o.out + "/reconstruction.png", r.reconstruction);
  const int64_t m = sys.source_dims();
  std::printf(
      "k_y=%.2f k_z=%.2f k_r=%.2f total=%.2f cbr=%.6f psnr_db=%.3f "
      "wire_bytes=%zu clamped=%d\n",
      r.ledger.ky, r.ledger.kz, r.ledger.kr, r.ledger.total(),
      Cbr(r.ledger, m), Psnr(img, r.reconstruction), r.wire.size(), r.clamped);
  return 0;
}

// Per-patch symbol allocation for one image, as a grid of counts.
int RunRatemap(const RunOpts& o) {
  const Config c = LoadConfig(o);
  SystemConfig cfg = SystemConfig::FromConfig(c);
  cfg.Validate();
  cfg = ResolveDatasetPaths(cfg);
  LogRunHeader("ratemap", c, cfg);

  const Tensor img = LoadInputImage(cfg, o);
  System sys = LoadSystem(cfg, static_cast<int>(img.dims()[0]),
                          static_cast<int>(img.dims()[1]), o,
                          /*require_checkpoint=*/false);
  const EncodeResult e = AliceEncode(sys, img, cfg.snr_db);

  std::ostringstream grid;
  for (int i = 0; i < sys.grid_h; ++i) {
    for (int j = 0; j < sys.grid_w; ++j) {
      if (j > 0) grid << ' ';
      grid << e.alloc.symbols[i * sys.grid_w + j];
    }
    grid << '\n';
  }
  fs::create_directories(o.out);
  WriteTextAtomic(o.out + "/ratemap.txt", grid.str());
  std::printf("%s", grid.str().c_str());
  std::printf("total_symbols=%lld cbr=%.6f\n",
              static_cast<long long>(e.alloc.total_symbols),
              Cbr(e.ledger, sys.source_dims()));
  return 0;
}

std::string Quoted(const std::string& s) { return "\"" + s + "\""; }

int RunWorker(const std::string& cmdline) {
  std::printf("[sweep] %s\n", cmdline.c_str());
  std::fflush(stdout);
  const int rc = std::system(cmdline.c_str());
  if (rc != 0) throw Error("config: sweep worker failed: " + cmdline);
  return rc;
}

// Trains one model per lambda, evaluates each across the SNR list, and
// merges the per-run CSV rows.  Workers are separate processes running this
// same binary, so each one re-derives its seeds from the config alone.
int RunSweep(const RunOpts& o) {
  if (o.lambdas.empty()) throw Error("config: sweep needs --lambdas");
  const std::vector<std::string> snrs =
      o.snrs.empty() ? std::vector<std::string>{""} : o.snrs;
  const Config c = LoadConfig(o);
  SystemConfig cfg = SystemConfig::FromConfig(c);
  cfg.Validate();
  LogRunHeader("sweep", c, cfg);
  fs::create_directories(o.out);

  std::string common;
  if (!o.config_path.empty()) common += " --config " + Quoted(o.config_path);
  for (const std::string& kv : o.sets) common += " --set " + Quoted(kv);

  std::string merged = RdCsvHeader() + "\n";
  for (const std::string& lam : o.lambdas) {
    const std::string dir = o.out + "/lambda_" + lam;
    RunWorker(Quoted(o.self) + " train" + common + " --lambda " + lam +
              " --out " + Quoted(dir));
    for (const std::string& snr : snrs) {
      const std::string run =
          dir + (snr.empty() ? "/eval" : "/snr_" + snr);
      std::string cmd = Quoted(o.self) + " eval" + common + " --lambda " +
                        lam + " --checkpoint " + Quoted(dir + "/model.ckpt") +
                        " --out " + Quoted(run);
      if (!snr.empty()) cmd += " --snr " + snr;
      RunWorker(cmd);
      const std::vector<uint8_t> csv = ReadFileBytes(run + "/rd.csv");
      const std::string text(csv.begin(), csv.end());
      const size_t nl = text.find('\n');
      if (nl != std::string::npos) merged += text.substr(nl + 1);
    }
  }
  WriteTextAtomic(o.out + "/rd.csv", merged);
  std::printf("[done] %s/rd.csv\n", o.out.c_str());
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"learned joint source-channel coding over a simulated channel"};
  app.require_subcommand(1);
  RunOpts o;
  o.self = argv[0];

  CLI::App* pre = app.add_subcommand(
      "pretrain", "source-coding phase only (transforms + entropy model)");
  CLI::App* train = app.add_subcommand(
      "train", "both phases: source coding, then joint channel training");
  CLI::App* eval = app.add_subcommand(
      "eval", "rate-distortion point over the held-out set, written as CSV");
  CLI::App* transmit = app.add_subcommand(
      "transmit", "one image through the wire format and noisy channel");
  CLI::App* ratemap = app.add_subcommand(
      "ratemap", "per-patch symbol allocation grid for one image");
  CLI::App* sweep = app.add_subcommand(
      "sweep", "train and evaluate a lambda grid across SNRs");
  for (CLI::App* sub : {pre, train, eval, transmit, ratemap, sweep})
    AddCommonFlags(sub, &o);
  transmit->add_option("--image", o.image, "input image (PNG or PPM)");
  ratemap->add_option("--image", o.image, "input image (PNG or PPM)");
  sweep->add_option("--lambdas", o.lambdas, "lambda list")->delimiter(',');
  sweep->add_option("--snrs", o.snrs, "SNR list in dB")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n%s", e.what(), app.help().c_str());
    return 2;
  }

  try {
    if (pre->parsed()) return RunTrain(o, /*joint=*/false);
    if (train->parsed()) return RunTrain(o, /*joint=*/true);
    if (eval->parsed()) return RunEval(o);
    if (transmit->parsed()) return RunTransmit(o);
    if (ratemap->parsed()) return RunRatemap(o);
    if (sweep->parsed()) return RunSweep(o);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace ntscc

int main(int argc, char** argv) { return ntscc::Main(argc, argv); }
