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

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "ntscc/image_io.hpp"
#include "ntscc/rng.hpp"
#include "ntscc/source_pipeline.hpp"

namespace ntscc {
namespace {

namespace fs = std::filesystem;

// Per-channel variance summed over channels, for one block.
double BlockVariance(const Tensor& img, int y0, int x0, int side) {
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0, sq = 0.0;
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        const double v = img.At(y0 + y, x0 + x, c);
        mean += v;
        sq += v * v;
      }
    }
    const double n = static_cast<double>(side) * side;
    mean /= n;
    total += sq / n - mean * mean;
  }
  return total;
}

TEST_CASE("synthetic texture is seed-deterministic") {
  const SourceImage a = SynthTexture(5, 32);
  const SourceImage b = SynthTexture(5, 32);
  const SourceImage c = SynthTexture(6, 32);
  REQUIRE(a.pixels.numel() == b.pixels.numel());
  bool same = true;
  for (int64_t i = 0; i < a.pixels.numel(); ++i) {
    same = same && a.pixels.data()[i] == b.pixels.data()[i];
  }
  CHECK(same);
  CHECK(a.block_types == b.block_types);
  bool differs = a.block_types != c.block_types;
  for (int64_t i = 0; i < a.pixels.numel() && !differs; ++i) {
    differs = a.pixels.data()[i] != c.pixels.data()[i];
  }
  CHECK(differs);
}

TEST_CASE("block labels match block statistics") {
  const SourceImage img = SynthTexture(17, 32);
  REQUIRE(img.block_side == 8);
  REQUIRE(img.block_types.size() == 16);

  int counts[4] = {0, 0, 0, 0};
  for (uint8_t t : img.block_types) counts[t] += 1;
  for (int t = 0; t < 4; ++t) CHECK(counts[t] == 4);

  for (int64_t i = 0; i < img.pixels.numel(); ++i) {
    CHECK(img.pixels.data()[i] >= 0.0);
    CHECK(img.pixels.data()[i] <= 1.0);
  }

  const int bx = 32 / img.block_side;
  double var_by_type[4] = {0, 0, 0, 0};
  for (size_t b = 0; b < img.block_types.size(); ++b) {
    const int y0 = static_cast<int>(b) / bx * img.block_side;
    const int x0 = static_cast<int>(b) % bx * img.block_side;
    var_by_type[img.block_types[b]] +=
        BlockVariance(img.pixels, y0, x0, img.block_side) / 4.0;
  }
  CHECK(var_by_type[kBlockConstant] < 1e-12);  // exact up to fp rounding
  CHECK(var_by_type[kBlockNoiseHigh] > 8.0 * var_by_type[kBlockNoiseLow]);
  CHECK(var_by_type[kBlockNoiseLow] > 0.0);
}

TEST_CASE("synthetic sizes must match the transform factor") {
  CHECK_THROWS_WITH_AS(SynthTexture(1, 30, 4), doctest::Contains("config:"),
                       Error);
  CHECK_NOTHROW(SynthTexture(1, 32, 4));
  CHECK_THROWS_AS(SynthTexture(1, 2), Error);
}

TEST_CASE("synthetic dataset is counted, unique and repeatable") {
  DatasetSpec spec;
  spec.kind = "synthetic";
  spec.crop = 32;
  spec.seed = 9;
  spec.count = 5;
  const Dataset a = LoadDataset(spec, 4);
  const Dataset b = LoadDataset(spec, 4);
  REQUIRE(a.images.size() == 5);
  CHECK(a.skipped == 0);
  std::set<std::string> ids;
  for (const auto& im : a.images) ids.insert(im.id);
  CHECK(ids.size() == 5);
  for (size_t i = 0; i < a.images.size(); ++i) {
    CHECK(a.images[i].id == b.images[i].id);
    CHECK(a.images[i].pixels.At(3, 3, 1) == b.images[i].pixels.At(3, 3, 1));
  }
}

TEST_CASE("folder datasets crop deterministically and skip small images") {
  const fs::path dir = fs::temp_directory_path() / "ntscc_src_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  WritePpm((dir / "a.ppm").string(), SynthTexture(1, 40).pixels);
  WritePpm((dir / "b.ppm").string(), SynthTexture(2, 40).pixels);
  WritePpm((dir / "tiny.ppm").string(), SynthTexture(3, 16).pixels);

  DatasetSpec spec;
  spec.kind = "folder";
  spec.folder = dir.string();
  spec.crop = 32;
  spec.seed = 4;
  spec.count = 10;
  const Dataset ds = LoadDataset(spec, 4);
  CHECK(ds.images.size() == 2);
  CHECK(ds.skipped == 1);
  for (const auto& im : ds.images) {
    CHECK(im.pixels.dims() == std::vector<int64_t>{32, 32, 3});
    CHECK(im.block_types.empty());
    for (int64_t i = 0; i < im.pixels.numel(); ++i) {
      CHECK(im.pixels.data()[i] >= 0.0);
      CHECK(im.pixels.data()[i] <= 1.0);
    }
  }
  const Dataset again = LoadDataset(spec, 4);
  CHECK(again.images[0].pixels.At(7, 9, 2) == ds.images[0].pixels.At(7, 9, 2));

  DatasetSpec bad = spec;
  bad.crop = 30;
  CHECK_THROWS_WITH_AS(LoadDataset(bad, 4), doctest::Contains("config:"),
                       Error);
  fs::remove_all(dir);
}

TEST_CASE("an unusable folder reports what it skipped") {
  const fs::path dir = fs::temp_directory_path() / "ntscc_src_empty";
  fs::remove_all(dir);
  fs::create_directories(dir);
  WritePpm((dir / "tiny.ppm").string(), SynthTexture(3, 8).pixels);
  DatasetSpec spec;
  spec.kind = "folder";
  spec.folder = dir.string();
  spec.crop = 32;
  spec.count = 4;
  CHECK_THROWS_WITH_AS(LoadDataset(spec, 4), doctest::Contains("io:"), Error);
  DatasetSpec unknown;
  unknown.kind = "stream";
  CHECK_THROWS_WITH_AS(LoadDataset(unknown, 4), doctest::Contains("config:"),
                       Error);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace ntscc
