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

#include "ntscc/model.hpp"

#include <sstream>

namespace ntscc {

System::System(const SystemConfig& config, int image_h, int image_w)
    : cfg(config), img_h(image_h), img_w(image_w) {
  cfg.Validate();
  const int ds = cfg.transform.downsample();
  if (img_h % ds != 0 || img_w % ds != 0) {
    throw Error("config: image dims not divisible by transform downsample");
  }
  grid_h = img_h / ds;
  grid_w = img_w / ds;
  if (grid_h % cfg.transform.window != 0 || grid_w % cfg.transform.window != 0) {
    throw Error("config: latent grid not tileable by attention window");
  }

  Rng rng_ga = Substream(cfg.seed, "init/ga", 0);
  ga = AnalysisTransform(ps, rng_ga, cfg.transform, img_h, img_w);
  Rng rng_gs = Substream(cfg.seed, "init/gs", 0);
  gs = SynthesisTransform(ps, rng_gs, cfg.transform, img_h, img_w);

  has_hyper = cfg.kind != ModelKind::kFixedJscc;
  if (has_hyper) {
    if (grid_h % 4 != 0 || grid_w % 4 != 0) {
      throw Error("config: latent grid not divisible for hyper transforms");
    }
    Rng rng_ha = Substream(cfg.seed, "init/ha", 0);
    ha = HyperAnalysis(ps, rng_ha, cfg.transform, grid_h, grid_w);
    z_h = ha.out_h();
    z_w = ha.out_w();
    Rng rng_hs = Substream(cfg.seed, "init/hs", 0);
    hs = HyperSynthesis(ps, rng_hs, cfg.transform, z_h, z_w);
    fz = FactorizedDensity(ps, "fz", cfg.transform.hyper_ch());
  }

  Rng rng_fe = Substream(cfg.seed, "init/fe", 0);
  fe = JsccEncoder(ps, rng_fe, cfg, grid_h, grid_w);
  Rng rng_fd = Substream(cfg.seed, "init/fd", 0);
  fd = JsccDecoder(ps, rng_fd, cfg, grid_h, grid_w);
}

std::string System::ArchSignature() const {
  std::ostringstream os;
  os << "kind=" << ModelKindName(cfg.kind) << ";stages=" << cfg.transform.stages
     << ";blocks=";
  for (size_t i = 0; i < cfg.transform.blocks.size(); ++i) {
    os << (i ? "," : "") << cfg.transform.blocks[i];
  }
  os << ";dim=" << cfg.transform.embed_dim << ";heads=" << cfg.transform.heads
     << ";window=" << cfg.transform.window
     << ";mlp=" << cfg.transform.mlp_ratio
     << ";hyper=" << cfg.transform.hyper_ch()
     << ";sigma_min=" << cfg.transform.sigma_min << ";rates=";
  if (cfg.rate_adaptive()) {
    for (size_t i = 0; i < cfg.rate.values.size(); ++i) {
      os << (i ? "," : "") << cfg.rate.values[i];
    }
    os << ";kq=" << cfg.rate.kq;
  } else {
    os << cfg.fixed_rate_v << ";kq=0";
  }
  os << ";enc=" << cfg.codec.enc_blocks << ";dec=" << cfg.codec.dec_blocks
     << ";cheads=" << cfg.codec.heads;
  return os.str();
}

void System::SaveCheckpoint(const std::string& path,
                            const std::string& note) const {
  ps.Save(path, ArchSignature() + "\n" + note);
}

std::string System::LoadCheckpoint(const std::string& path) {
  // Check the architecture line before ps.Load touches any tensor, so an
  // incompatible file fails with a config error instead of a shape error.
  const std::string meta = PeekCheckpointMetadata(path);
  const size_t nl = meta.find('\n');
  const std::string arch = nl == std::string::npos ? meta : meta.substr(0, nl);
  if (arch != ArchSignature()) {
    throw Error("config: checkpoint architecture mismatch: " + arch);
  }
  ps.Load(path);
  return nl == std::string::npos ? std::string() : meta.substr(nl + 1);
}

}  // namespace ntscc
