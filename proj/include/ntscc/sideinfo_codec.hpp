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

#ifndef NTSCC_SIDEINFO_CODEC_HPP_
#define NTSCC_SIDEINFO_CODEC_HPP_

#include <cstdint>
#include <vector>

namespace ntscc {

// Fixed-point symbol frequencies for the range coder.  Frequencies sum to
// exactly 1 << 16 and every symbol in [lo, hi] keeps at least one count, so
// any clamped integer is codable.
struct SymbolTable {
  int lo = 0, hi = 0;
  std::vector<uint32_t> freq;
  std::vector<uint32_t> cum;  // size() == freq.size() + 1, cum.back() == 1<<16

  int num_symbols() const { return hi - lo + 1; }
};

// Quantizes a pmf over [lo, hi] (probabilities, possibly unnormalized by a
// tiny floor) into coder frequencies.
SymbolTable BuildSymbolTable(const std::vector<double>& pmf, int lo, int hi);

// Byte-aligned range coder stream: a 16-bit little-endian symbol count, then
// the coded bytes.  table_of[i] selects the table for symbol i (tables are
// per hyper channel); values outside a table's range throw.
std::vector<uint8_t> RangeEncode(const std::vector<int32_t>& symbols,
                                 const std::vector<const SymbolTable*>& table_of);

// Decodes count symbols; table_of must match the encoder.  Throws
// "framing:" on truncated input.
std::vector<int32_t> RangeDecode(const std::vector<uint8_t>& stream,
                                 const std::vector<const SymbolTable*>& table_of);

// Ideal codelength of the symbols under the quantized tables, in bits.
double CrossEntropyBits(const std::vector<int32_t>& symbols,
                        const std::vector<const SymbolTable*>& table_of);

}  // namespace ntscc

#endif  // NTSCC_SIDEINFO_CODEC_HPP_
