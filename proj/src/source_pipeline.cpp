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

#include "ntscc/source_pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>

#include "ntscc/image_io.hpp"
#include "ntscc/rng.hpp"

namespace ntscc {

namespace {

void FillBlock(Tensor& img, int y0, int x0, int side, SynthBlock type,
               Rng& rng) {
  const int w = static_cast<int>(img.dim(1));
  (void)w;
  auto px = [&](int y, int x, int c) -> double& { return img.At(y, x, c); };
  double base[3];
  for (double& b : base) b = 0.1 + 0.8 * rng.Uniform();
  switch (type) {
    case kBlockConstant:
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
          for (int c = 0; c < 3; ++c) px(y0 + y, x0 + x, c) = base[c];
      break;
    case kBlockGradient: {
      double target[3];
      for (double& t : target) t = 0.1 + 0.8 * rng.Uniform();
      int dir = static_cast<int>(rng.Below(3));  // 0 horiz, 1 vert, 2 diag
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          double t;
          if (dir == 0) t = x / std::max(1.0, side - 1.0);
          else if (dir == 1) t = y / std::max(1.0, side - 1.0);
          else t = (x + y) / std::max(1.0, 2.0 * (side - 1));
          for (int c = 0; c < 3; ++c)
            px(y0 + y, x0 + x, c) = base[c] + t * (target[c] - base[c]);
        }
      break;
    }
    case kBlockNoiseLow:
    case kBlockNoiseHigh: {
      double sigma = type == kBlockNoiseLow ? 0.05 : 0.3;
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
          for (int c = 0; c < 3; ++c)
            px(y0 + y, x0 + x, c) =
                std::clamp(base[c] + sigma * rng.Normal(), 0.0, 1.0);
      break;
    }
  }
}

}  // namespace

SourceImage SynthTexture(uint64_t seed, int size, int downsample_factor) {
  if (size < 4) throw Error("config: synthetic size too small");
  if (downsample_factor > 1 && size % downsample_factor != 0)
    throw Error("config: synthetic size " + std::to_string(size) +
                " is not divisible by the transform factor " +
                std::to_string(downsample_factor));
  int side = size >= 16 ? 8 : size / 2;
  while (size % side != 0) --side;
  const int by = size / side, bx = size / side;
  const int nblocks = by * bx;

  // One quarter of each type (round-robin), then a seeded shuffle: every
  // image is guaranteed flat and high-variance regions.
  std::vector<uint8_t> types(nblocks);
  for (int i = 0; i < nblocks; ++i) types[i] = static_cast<uint8_t>(i % 4);
  Rng shuffle_rng = Substream(seed, "synth-shuffle", 0);
  for (int i = nblocks - 1; i > 0; --i) {
    int j = static_cast<int>(shuffle_rng.Below(static_cast<uint64_t>(i) + 1));
    std::swap(types[i], types[j]);
  }

  SourceImage out;
  out.id = "synth-" + std::to_string(seed) + "-" + std::to_string(size);
  out.pixels = Tensor({size, size, 3});
  out.block_types = types;
  out.block_side = side;
  Rng fill_rng = Substream(seed, "synth-fill", 0);
  for (int b = 0; b < nblocks; ++b)
    FillBlock(out.pixels, (b / bx) * side, (b % bx) * side, side,
              static_cast<SynthBlock>(types[b]), fill_rng);
  return out;
}

Dataset LoadDataset(const DatasetSpec& spec, int downsample_factor) {
  Dataset ds;
  if (spec.kind == "synthetic") {
    for (int i = 0; i < spec.count; ++i) {
      uint64_t s = DeriveSeed(spec.seed, static_cast<uint64_t>(i));
      ds.images.push_back(SynthTexture(s, spec.crop, downsample_factor));
    }
    return ds;
  }
  if (spec.kind != "folder")
    throw Error("config: unknown dataset kind " + spec.kind);
  if (spec.crop % downsample_factor != 0)
    throw Error("config: crop " + std::to_string(spec.crop) +
                " is not divisible by the transform factor " +
                std::to_string(downsample_factor));

  std::vector<std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(spec.folder)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm")
      files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());

  int taken = 0;
  for (size_t i = 0; i < files.size() && taken < spec.count; ++i) {
    Tensor img = ReadImage(files[i]);
    int h = static_cast<int>(img.dim(0)), w = static_cast<int>(img.dim(1));
    if (h < spec.crop || w < spec.crop) {
      ++ds.skipped;
      continue;
    }
    Rng r = Substream(spec.seed, "crop", i);
    int oy = h == spec.crop ? 0 : static_cast<int>(r.Below(h - spec.crop + 1));
    int ox = w == spec.crop ? 0 : static_cast<int>(r.Below(w - spec.crop + 1));
    SourceImage si;
    si.id = std::filesystem::path(files[i]).filename().string() + "+" +
            std::to_string(oy) + "+" + std::to_string(ox);
    si.pixels = Tensor({spec.crop, spec.crop, 3});
    for (int y = 0; y < spec.crop; ++y)
      for (int x = 0; x < spec.crop; ++x)
        for (int c = 0; c < 3; ++c)
          si.pixels.At(y, x, c) = img.At(oy + y, ox + x, c);
    ds.images.push_back(std::move(si));
    ++taken;
  }
  if (ds.images.empty())
    throw Error("io: no usable images in " + spec.folder + " (" +
                std::to_string(ds.skipped) + " skipped as smaller than crop)");
  return ds;
}

}  // namespace ntscc
