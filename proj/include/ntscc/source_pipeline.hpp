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

#ifndef NTSCC_SOURCE_PIPELINE_HPP_
#define NTSCC_SOURCE_PIPELINE_HPP_

#include <string>
#include <vector>

#include "ntscc/config.hpp"
#include "ntscc/tensor.hpp"

namespace ntscc {

// Block types of the synthetic texture source.
enum SynthBlock : uint8_t {
  kBlockConstant = 0,
  kBlockGradient = 1,
  kBlockNoiseLow = 2,
  kBlockNoiseHigh = 3,
};

struct SourceImage {
  std::string id;
  Tensor pixels;  // (h, w, 3) in [0, 1]
  // For synthetic images: per-block labels, row-major, blocks of side
  // block_side pixels.  Empty for folder images.
  std::vector<uint8_t> block_types;
  int block_side = 0;
};

// Deterministic block-structured texture: equal numbers of constant,
// gradient, low-noise and high-noise blocks in a seeded shuffle, so every
// image carries both flat and busy regions with known labels.
// downsample_factor (when > 1) must divide size.
SourceImage SynthTexture(uint64_t seed, int size, int downsample_factor = 1);

struct Dataset {
  std::vector<SourceImage> images;
  int skipped = 0;  // folder images smaller than the crop
};

Dataset LoadDataset(const DatasetSpec& spec, int downsample_factor);

}  // namespace ntscc

#endif  // NTSCC_SOURCE_PIPELINE_HPP_
