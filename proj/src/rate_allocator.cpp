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

#include "ntscc/rate_allocator.hpp"

#include <cmath>

#include "ntscc/tensor.hpp"

namespace ntscc {

RateAllocation Allocate(const std::vector<double>& scaled_bits,
                        const RateConfig& rate) {
  const auto& vals = rate.values;
  RateAllocation a;
  a.index.reserve(scaled_bits.size());
  a.symbols.reserve(scaled_bits.size());
  for (double b : scaled_bits) {
    // Values ascend, so visiting in order with '<=' leaves ties on the
    // larger entry.
    int best = 0;
    double best_d = std::abs(b - vals[0]);
    for (size_t j = 1; j < vals.size(); ++j) {
      double d = std::abs(b - vals[j]);
      if (d <= best_d) {
        best = static_cast<int>(j);
        best_d = d;
      }
    }
    a.index.push_back(best);
    a.symbols.push_back(vals[best]);
    a.total_symbols += vals[best];
  }
  return a;
}

RateAllocation AllocateUniform(int num_patches, int v) {
  RateAllocation a;
  a.index.assign(num_patches, 0);
  a.symbols.assign(num_patches, v);
  a.total_symbols = static_cast<int64_t>(num_patches) * v;
  return a;
}

std::vector<uint8_t> PackRateMap(const RateAllocation& alloc, int kq) {
  const int64_t bits = static_cast<int64_t>(alloc.index.size()) * kq;
  std::vector<uint8_t> out((bits + 7) / 8, 0);
  int64_t pos = 0;
  for (int idx : alloc.index) {
    if (idx < 0 || (kq < 31 && idx >= (1 << kq)))
      throw Error("framing: rate index " + std::to_string(idx) +
                  " does not fit in " + std::to_string(kq) + " bits");
    for (int b = kq - 1; b >= 0; --b) {
      if ((idx >> b) & 1) out[pos / 8] |= uint8_t(0x80 >> (pos % 8));
      ++pos;
    }
  }
  return out;
}

std::vector<int> UnpackRateMap(const std::vector<uint8_t>& bytes,
                               int num_patches, int kq) {
  const int64_t bits = static_cast<int64_t>(num_patches) * kq;
  if (static_cast<int64_t>(bytes.size()) != (bits + 7) / 8)
    throw Error("framing: rate map size mismatch");
  std::vector<int> idx(num_patches, 0);
  int64_t pos = 0;
  for (int i = 0; i < num_patches; ++i) {
    int v = 0;
    for (int b = 0; b < kq; ++b) {
      v = (v << 1) | ((bytes[pos / 8] >> (7 - pos % 8)) & 1);
      ++pos;
    }
    idx[i] = v;
  }
  return idx;
}

RateAllocation AllocationFromIndices(const std::vector<int>& indices,
                                     const RateConfig& rate) {
  RateAllocation a;
  a.index = indices;
  a.symbols.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || i >= static_cast<int>(rate.values.size()))
      throw Error("framing: rate index out of range");
    a.symbols.push_back(rate.values[i]);
    a.total_symbols += rate.values[i];
  }
  return a;
}

}  // namespace ntscc
