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

#ifndef NTSCC_RATE_ALLOCATOR_HPP_
#define NTSCC_RATE_ALLOCATOR_HPP_

#include <cstdint>
#include <vector>

#include "ntscc/config.hpp"

namespace ntscc {

// Per-patch channel bandwidth choice.
struct RateAllocation {
  std::vector<int> index;    // per patch, index into RateConfig::values
  std::vector<int> symbols;  // per patch, values[index]
  int64_t total_symbols = 0;

  int num_patches() const { return static_cast<int>(index.size()); }
};

// Maps per-patch entropies (in bits, already scaled by eta) to the nearest
// entry of the bandwidth set; ties go to the larger entry, out-of-range
// values clamp to the ends.
RateAllocation Allocate(const std::vector<double>& scaled_bits,
                        const RateConfig& rate);

// Fixed allocation: every patch gets the same symbol count.
RateAllocation AllocateUniform(int num_patches, int v);

// Rate map wire form: kq bits per patch, patch-major, big-endian within each
// byte; the final byte is zero-padded.
std::vector<uint8_t> PackRateMap(const RateAllocation& alloc, int kq);
std::vector<int> UnpackRateMap(const std::vector<uint8_t>& bytes,
                               int num_patches, int kq);

// Rebuilds a RateAllocation from unpacked indices.
RateAllocation AllocationFromIndices(const std::vector<int>& indices,
                                     const RateConfig& rate);

}  // namespace ntscc

#endif  // NTSCC_RATE_ALLOCATOR_HPP_
