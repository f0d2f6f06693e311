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

#include "ntscc/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

namespace ntscc {

namespace {

Tensor FromBytes(const std::vector<uint8_t>& buf, int h, int w, int ch) {
  Tensor img({h, w, 3});
  for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i)
    for (int c = 0; c < 3; ++c)
      img[i * 3 + c] = buf[i * ch + (ch == 1 ? 0 : c)] / 255.0;
  return img;
}

Tensor ReadPpm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("io: cannot open " + path);
  std::string magic;
  f >> magic;
  if (magic != "P6" && magic != "P5")
    throw Error("io: unsupported PNM magic in " + path);
  auto next_int = [&]() {
    // Skips whitespace and '#' comments.
    for (;;) {
      int c = f.peek();
      if (c == '#') {
        std::string line;
        std::getline(f, line);
      } else if (std::isspace(c)) {
        f.get();
      } else {
        break;
      }
    }
    int v;
    f >> v;
    return v;
  };
  int w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0 || maxval != 255)
    throw Error("io: unsupported PNM header in " + path);
  f.get();  // single whitespace before raster
  int ch = magic == "P6" ? 3 : 1;
  std::vector<uint8_t> buf(static_cast<size_t>(w) * h * ch);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw Error("io: truncated PNM raster in " + path);
  return FromBytes(buf, h, w, ch);
}

Tensor ReadPngFile(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw Error("io: cannot read png " + path + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error("io: cannot decode png " + path + ": " + msg);
  }
  return FromBytes(buf, static_cast<int>(image.height),
                   static_cast<int>(image.width), 3);
}

std::vector<uint8_t> ToBytes(const Tensor& img) {
  if (img.ndim() != 3 || img.dim(2) != 3)
    throw Error("shape: image tensor must be (h,w,3), got " + img.ShapeStr());
  std::vector<uint8_t> buf(img.numel());
  for (int64_t i = 0; i < img.numel(); ++i) {
    double v = std::clamp(img[i], 0.0, 1.0);
    buf[i] = static_cast<uint8_t>(std::lround(v * 255.0));
  }
  return buf;
}

}  // namespace

Tensor ReadImage(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return ReadPpm(path);
  if (ext == ".png") return ReadPngFile(path);
  throw Error("io: unsupported image extension " + path);
}

void WritePpm(const std::string& path, const Tensor& img) {
  std::vector<uint8_t> buf = ToBytes(img);
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("io: cannot write " + tmp);
    f << "P6\n" << img.dim(1) << " " << img.dim(0) << "\n255\n";
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!f) throw Error("io: short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void WritePng(const std::string& path, const Tensor& img) {
  std::vector<uint8_t> buf = ToBytes(img);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.dim(1));
  image.height = static_cast<png_uint_32>(img.dim(0));
  image.format = PNG_FORMAT_RGB;
  std::string tmp = path + ".tmp";
  if (!png_image_write_to_file(&image, tmp.c_str(), 0, buf.data(), 0, nullptr))
    throw Error("io: cannot write png " + path + ": " + image.message);
  std::filesystem::rename(tmp, path);
}

}  // namespace ntscc
