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

#include "ntscc/channel_sim.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace ntscc {

double NoiseSigma(double snr_db) {
  return std::sqrt(std::pow(10.0, -snr_db / 10.0));
}

double CapacityBitsPerSymbol(double snr_db) {
  return std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

Tensor AwgnNoise(const std::vector<int64_t>& dims, double snr_db, Rng& rng) {
  Tensor n(dims);
  double sigma = NoiseSigma(snr_db);
  for (int64_t i = 0; i < n.numel(); ++i) n[i] = sigma * rng.Normal();
  return n;
}

double Cbr(const BandwidthLedger& l, int64_t source_dims) {
  if (source_dims <= 0) throw Error("config: source dimension must be positive");
  return l.total() / static_cast<double>(source_dims);
}

namespace {

constexpr uint32_t kMagic = 0x4e545343;  // "NTSC"
constexpr uint32_t kVersion = 1;

template <typename T>
void Put(std::vector<uint8_t>& out, T v) {
  uint8_t b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

struct Rd {
  const std::vector<uint8_t>& buf;
  size_t off = 0;
  template <typename T>
  T Get() {
    if (off + sizeof(T) > buf.size()) throw Error("framing: truncated transmission");
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
  }
  void GetBytes(void* dst, size_t n) {
    if (off + n > buf.size()) throw Error("framing: truncated transmission");
    std::memcpy(dst, buf.data() + off, n);
    off += n;
  }
};

}  // namespace

std::vector<uint8_t> SerializeTransmission(const Transmission& t) {
  std::vector<uint8_t> out;
  out.reserve(64 + t.rate_map.size() + t.z_stream.size() +
              8 * t.symbols.size());
  Put<uint32_t>(out, kMagic);
  Put<uint32_t>(out, kVersion);
  Put<uint32_t>(out, t.grid_h);
  Put<uint32_t>(out, t.grid_w);
  Put<uint32_t>(out, t.kq);
  Put<uint32_t>(out, static_cast<uint32_t>(t.rate_values.size()));
  for (uint32_t v : t.rate_values) Put<uint32_t>(out, v);
  Put<int32_t>(out, t.snr_milli_db);

  const uint64_t patches = static_cast<uint64_t>(t.grid_h) * t.grid_w;
  const uint64_t map_bytes = (patches * t.kq + 7) / 8;
  if (t.rate_map.size() != map_bytes)
    throw Error("framing: rate map has " + std::to_string(t.rate_map.size()) +
                " bytes, header implies " + std::to_string(map_bytes));
  out.insert(out.end(), t.rate_map.begin(), t.rate_map.end());

  Put<uint32_t>(out, static_cast<uint32_t>(t.z_stream.size()));
  out.insert(out.end(), t.z_stream.begin(), t.z_stream.end());

  Put<uint32_t>(out, static_cast<uint32_t>(t.symbols.size()));
  for (double s : t.symbols) Put<double>(out, s);
  return out;
}

Transmission ParseTransmission(const std::vector<uint8_t>& bytes) {
  Rd r{bytes};
  if (r.Get<uint32_t>() != kMagic) throw Error("framing: bad magic");
  uint32_t version = r.Get<uint32_t>();
  if (version != kVersion)
    throw Error("framing: unsupported version " + std::to_string(version));
  Transmission t;
  t.grid_h = r.Get<uint32_t>();
  t.grid_w = r.Get<uint32_t>();
  t.kq = r.Get<uint32_t>();
  uint32_t nv = r.Get<uint32_t>();
  if (t.kq > 16 || nv != (1u << t.kq))
    throw Error("framing: bandwidth set size mismatch");
  t.rate_values.resize(nv);
  for (auto& v : t.rate_values) v = r.Get<uint32_t>();
  t.snr_milli_db = r.Get<int32_t>();

  const uint64_t patches = static_cast<uint64_t>(t.grid_h) * t.grid_w;
  if (patches == 0 || patches > (1ull << 26))
    throw Error("framing: implausible patch count");
  t.rate_map.resize((patches * t.kq + 7) / 8);
  r.GetBytes(t.rate_map.data(), t.rate_map.size());

  uint32_t zlen = r.Get<uint32_t>();
  t.z_stream.resize(zlen);
  r.GetBytes(t.z_stream.data(), zlen);

  uint32_t ns = r.Get<uint32_t>();
  t.symbols.resize(ns);
  for (auto& s : t.symbols) s = r.Get<double>();
  if (r.off != bytes.size())
    throw Error("framing: trailing bytes in transmission");
  return t;
}

void WriteFileAtomic(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("io: cannot write " + tmp);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("io: short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("io: cannot open " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  return buf;
}

}  // namespace ntscc
