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

#include "ntscc/sideinfo_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ntscc/tensor.hpp"

namespace ntscc {
namespace {

constexpr uint32_t kTotalFreq = 1u << 16;
constexpr uint32_t kTopValue = 1u << 24;

// LZMA-style carryless range encoder.  The 64-bit low catches carries; bytes
// leave through a one-byte cache so a carry can still bump them.
class RangeEncoder {
 public:
  explicit RangeEncoder(std::vector<uint8_t>* out) : out_(out) {}

  void Encode(uint32_t cum_start, uint32_t freq) {
    range_ /= kTotalFreq;
    low_ += static_cast<uint64_t>(cum_start) * range_;
    range_ *= freq;
    while (range_ < kTopValue) {
      range_ <<= 8;
      ShiftLow();
    }
  }

  void Flush() {
    for (int i = 0; i < 5; ++i) ShiftLow();
  }

 private:
  void ShiftLow() {
    if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
      if (started_) {
        out_->push_back(static_cast<uint8_t>(cache_ + (low_ >> 32)));
      }
      for (; pending_ > 0; --pending_) {
        out_->push_back(static_cast<uint8_t>(0xFF + (low_ >> 32)));
      }
      cache_ = static_cast<uint8_t>(low_ >> 24);
      started_ = true;
    } else {
      ++pending_;
    }
    low_ = (low_ << 8) & 0xFFFFFFFFull;
  }

  std::vector<uint8_t>* out_;
  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t pending_ = 0;
  bool started_ = false;
};

class RangeDecoder {
 public:
  RangeDecoder(const std::vector<uint8_t>& buf, size_t pos)
      : buf_(buf), pos_(pos) {
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | NextByte();
  }

  uint32_t DecodeFreq() {
    range_ /= kTotalFreq;
    return std::min(code_ / range_, kTotalFreq - 1);
  }

  void Update(uint32_t cum_start, uint32_t freq) {
    code_ -= cum_start * range_;
    range_ *= freq;
    while (range_ < kTopValue) {
      range_ <<= 8;
      code_ = (code_ << 8) | NextByte();
    }
  }

 private:
  uint8_t NextByte() {
    if (pos_ >= buf_.size()) {
      throw Error("framing: range-coded stream truncated");
    }
    return buf_[pos_++];
  }

  const std::vector<uint8_t>& buf_;
  size_t pos_;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
};

}  // namespace

SymbolTable BuildSymbolTable(const std::vector<double>& pmf, int lo, int hi) {
  const int n = hi - lo + 1;
  if (n <= 0 || static_cast<size_t>(n) != pmf.size()) {
    throw Error("config: symbol table pmf size mismatch");
  }
  double total = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error("config: symbol table pmf has invalid entries");
    }
    total += p;
  }
  if (total <= 0.0) throw Error("config: symbol table pmf sums to zero");

  SymbolTable t;
  t.lo = lo;
  t.hi = hi;
  t.freq.assign(n, 1);  // every symbol stays codable
  uint32_t assigned = static_cast<uint32_t>(n);
  if (assigned > kTotalFreq) {
    throw Error("config: symbol alphabet too large for coder precision");
  }
  const uint32_t budget = kTotalFreq - assigned;
  // Round down first, then hand the remainder to the largest fractional
  // parts; ties break on the lower symbol so tables are deterministic.
  std::vector<double> frac(n);
  uint64_t used = 0;
  for (int i = 0; i < n; ++i) {
    const double share = pmf[i] / total * budget;
    const double fl = std::floor(share);
    t.freq[i] += static_cast<uint32_t>(fl);
    used += static_cast<uint64_t>(fl);
    frac[i] = share - fl;
  }
  uint32_t left = budget - static_cast<uint32_t>(used);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&frac](int a, int b) {
    return frac[a] > frac[b];
  });
  for (uint32_t i = 0; i < left; ++i) t.freq[order[i % n]] += 1;

  t.cum.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) t.cum[i + 1] = t.cum[i] + t.freq[i];
  return t;
}

std::vector<uint8_t> RangeEncode(const std::vector<int32_t>& symbols,
                                 const std::vector<const SymbolTable*>& table_of) {
  if (symbols.size() != table_of.size()) {
    throw Error("shape: symbol/table count mismatch");
  }
  if (symbols.size() > 0xFFFF) {
    throw Error("config: too many side-info symbols for one stream");
  }
  std::vector<uint8_t> out;
  out.push_back(static_cast<uint8_t>(symbols.size() & 0xFF));
  out.push_back(static_cast<uint8_t>(symbols.size() >> 8));
  if (symbols.empty()) return out;  // no payload, not even flush bytes
  RangeEncoder enc(&out);
  for (size_t i = 0; i < symbols.size(); ++i) {
    const SymbolTable& t = *table_of[i];
    const int32_t s = symbols[i];
    if (s < t.lo || s > t.hi) {
      throw Error("shape: symbol outside coder table range");
    }
    const int idx = s - t.lo;
    enc.Encode(t.cum[idx], t.freq[idx]);
  }
  enc.Flush();
  return out;
}

std::vector<int32_t> RangeDecode(const std::vector<uint8_t>& stream,
                                 const std::vector<const SymbolTable*>& table_of) {
  if (stream.size() < 2) throw Error("framing: side-info stream too short");
  const size_t count = static_cast<size_t>(stream[0]) |
                       (static_cast<size_t>(stream[1]) << 8);
  if (count != table_of.size()) {
    throw Error("framing: side-info symbol count mismatch");
  }
  if (count == 0) return {};
  // The encoder's first ShiftLow emits nothing (started_ false), so the
  // decoder primes directly with the first four payload bytes.
  RangeDecoder dec(stream, 2);
  std::vector<int32_t> out(count);
  for (size_t i = 0; i < count; ++i) {
    const SymbolTable& t = *table_of[i];
    const uint32_t f = dec.DecodeFreq();
    // Find the symbol whose cumulative span contains f.
    const auto it = std::upper_bound(t.cum.begin(), t.cum.end(), f);
    const int idx = static_cast<int>(it - t.cum.begin()) - 1;
    dec.Update(t.cum[idx], t.freq[idx]);
    out[i] = t.lo + idx;
  }
  return out;
}

double CrossEntropyBits(const std::vector<int32_t>& symbols,
                        const std::vector<const SymbolTable*>& table_of) {
  double bits = 0.0;
  for (size_t i = 0; i < symbols.size(); ++i) {
    const SymbolTable& t = *table_of[i];
    const int idx = symbols[i] - t.lo;
    bits += std::log2(static_cast<double>(kTotalFreq) / t.freq[idx]);
  }
  return bits;
}

}  // namespace ntscc
