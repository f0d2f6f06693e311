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

#ifndef NTSCC_MODEL_HPP_
#define NTSCC_MODEL_HPP_

#include <string>

#include "ntscc/config.hpp"
#include "ntscc/entropy_model.hpp"
#include "ntscc/jscc_codec.hpp"
#include "ntscc/nonlinear_transform.hpp"

namespace ntscc {

// The full system for one image geometry: source transforms, hyperprior,
// channel codec and their parameters.  Parameter shapes do not depend on the
// image size, so checkpoints move freely between geometries of the same
// architecture.
struct System {
  SystemConfig cfg;
  int img_h = 0, img_w = 0;
  int grid_h = 0, grid_w = 0;
  int z_h = 0, z_w = 0;

  ParamStore ps;
  AnalysisTransform ga;
  SynthesisTransform gs;
  bool has_hyper = false;
  HyperAnalysis ha;
  HyperSynthesis hs;
  FactorizedDensity fz;
  JsccEncoder fe;
  JsccDecoder fd;

  System(const SystemConfig& config, int image_h, int image_w);

  int num_patches() const { return grid_h * grid_w; }
  int64_t source_dims() const {
    return static_cast<int64_t>(img_h) * img_w * 3;
  }

  // Architecture fingerprint; checkpoints refuse to load across different
  // architectures even when tensor shapes happen to line up.
  std::string ArchSignature() const;

  void SaveCheckpoint(const std::string& path, const std::string& note) const;
  // Returns the stored note.
  std::string LoadCheckpoint(const std::string& path);
};

}  // namespace ntscc

#endif  // NTSCC_MODEL_HPP_
