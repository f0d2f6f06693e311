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

#include <cmath>
#include <cstdint>
#include <vector>

#include "ntscc/sideinfo_codec.hpp"
#include "ntscc/rng.hpp"
#include "ntscc/tensor.hpp"

namespace ntscc {
namespace {

// Random discretized-Gaussian-ish pmf over [lo, hi].
std::vector<double> RandomPmf(Rng& rng, int lo, int hi) {
  const double mu = (rng.Uniform() - 0.5) * 4.0;
  const double sigma = 0.3 + 3.0 * rng.Uniform();
  std::vector<double> pmf;
  double sum = 0.0;
  for (int v = lo; v <= hi; ++v) {
    const double p = std::exp(-0.5 * (v - mu) * (v - mu) / (sigma * sigma));
    pmf.push_back(p);
    sum += p;
  }
  for (double& p : pmf) p /= sum;
  return pmf;
}

TEST_CASE("random symbols roundtrip across mixed tables") {
  Rng rng = Substream(901, "test/sideinfo", 0);
  const int lo = -32, hi = 32;
  std::vector<SymbolTable> tables;
  for (int t = 0; t < 3; ++t) {
    tables.push_back(BuildSymbolTable(RandomPmf(rng, lo, hi), lo, hi));
  }
  const int n = 500;
  std::vector<int32_t> symbols(n);
  std::vector<const SymbolTable*> table_of(n);
  for (int i = 0; i < n; ++i) {
    table_of[i] = &tables[i % 3];
    // Bias draws toward the table mode so lengths stay near the entropy.
    const double u = rng.Uniform();
    symbols[i] = lo + static_cast<int32_t>(u * u * (hi - lo + 1));
  }
  const std::vector<uint8_t> stream = RangeEncode(symbols, table_of);
  const std::vector<int32_t> decoded = RangeDecode(stream, table_of);
  REQUIRE(decoded.size() == symbols.size());
  for (int i = 0; i < n; ++i) CHECK(decoded[i] == symbols[i]);
}

TEST_CASE("coded length stays close to the table cross entropy") {
  Rng rng = Substream(902, "test/sideinfo", 1);
  const int lo = -64, hi = 64;
  const SymbolTable table = BuildSymbolTable(RandomPmf(rng, lo, hi), lo, hi);
  const int n = 400;
  std::vector<int32_t> symbols(n);
  std::vector<const SymbolTable*> table_of(n, &table);
  for (int i = 0; i < n; ++i) {
    // Sample from the quantized table itself via inverse cdf.
    const uint32_t target = static_cast<uint32_t>(rng.Below(1u << 16));
    int s = 0;
    while (table.cum[s + 1] <= target) ++s;
    symbols[i] = table.lo + s;
  }
  const double ideal_bits = CrossEntropyBits(symbols, table_of);
  const std::vector<uint8_t> stream = RangeEncode(symbols, table_of);
  const double coded_bits = 8.0 * (static_cast<double>(stream.size()) - 2.0);
  CHECK(coded_bits >= ideal_bits - 1e-9);
  // Range coding overhead: under a byte of rounding plus the flushed tail.
  CHECK(coded_bits <= ideal_bits + 48.0);
}

TEST_CASE("peaked pmf codes far below a uniform one") {
  const int lo = -16, hi = 16;
  std::vector<double> peaked(hi - lo + 1, 1e-9);
  peaked[16] = 1.0;  // all mass on zero
  std::vector<double> uniform(hi - lo + 1, 1.0 / (hi - lo + 1));
  const SymbolTable tp = BuildSymbolTable(peaked, lo, hi);
  const SymbolTable tu = BuildSymbolTable(uniform, lo, hi);
  const std::vector<int32_t> symbols(300, 0);
  const std::vector<const SymbolTable*> refs_p(symbols.size(), &tp);
  const std::vector<const SymbolTable*> refs_u(symbols.size(), &tu);
  const std::vector<uint8_t> sp = RangeEncode(symbols, refs_p);
  const std::vector<uint8_t> su = RangeEncode(symbols, refs_u);
  CHECK(sp.size() * 10 < su.size());
  CHECK(RangeDecode(sp, refs_p) == symbols);
  CHECK(RangeDecode(su, refs_u) == symbols);
}

TEST_CASE("truncated or empty streams throw framing errors") {
  Rng rng = Substream(903, "test/sideinfo", 2);
  const int lo = -8, hi = 8;
  const SymbolTable table = BuildSymbolTable(RandomPmf(rng, lo, hi), lo, hi);
  const int n = 64;
  std::vector<int32_t> symbols(n);
  for (int i = 0; i < n; ++i) symbols[i] = lo + static_cast<int32_t>(rng.Below(hi - lo + 1));
  const std::vector<const SymbolTable*> table_of(n, &table);
  std::vector<uint8_t> stream = RangeEncode(symbols, table_of);

  std::vector<uint8_t> cut(stream.begin(), stream.begin() + 2 + 2);
  CHECK_THROWS_WITH_AS(RangeDecode(cut, table_of), doctest::Contains("framing:"), Error);
  CHECK_THROWS_WITH_AS(RangeDecode({0x05}, table_of), doctest::Contains("framing:"), Error);
  // Count prefix larger than the caller's table list.
  std::vector<const SymbolTable*> short_refs(n - 1, &table);
  CHECK_THROWS_AS(RangeDecode(stream, short_refs), Error);
}

TEST_CASE("empty symbol list roundtrips as a bare count") {
  const std::vector<int32_t> symbols;
  const std::vector<const SymbolTable*> table_of;
  const std::vector<uint8_t> stream = RangeEncode(symbols, table_of);
  CHECK(stream.size() == 2);  // just the u16 count
  CHECK(RangeDecode(stream, table_of).empty());
  CHECK(CrossEntropyBits(symbols, table_of) == 0.0);
}

TEST_CASE("symbol tables are deterministic and exactly normalized") {
  Rng rng = Substream(904, "test/sideinfo", 3);
  const int lo = -64, hi = 64;
  const std::vector<double> pmf = RandomPmf(rng, lo, hi);
  const SymbolTable a = BuildSymbolTable(pmf, lo, hi);
  const SymbolTable b = BuildSymbolTable(pmf, lo, hi);
  CHECK(a.freq == b.freq);
  CHECK(a.num_symbols() == hi - lo + 1);
  uint64_t sum = 0;
  for (size_t i = 0; i < a.freq.size(); ++i) {
    CHECK(a.freq[i] >= 1u);  // every symbol stays codable
    CHECK(a.cum[i + 1] - a.cum[i] == a.freq[i]);
    sum += a.freq[i];
  }
  CHECK(sum == (1u << 16));
  CHECK(a.cum.front() == 0u);
  CHECK(a.cum.back() == (1u << 16));
}

TEST_CASE("degenerate one-symbol alphabet costs only the framing") {
  const SymbolTable table = BuildSymbolTable({1.0}, 7, 7);
  const std::vector<int32_t> symbols(1000, 7);
  const std::vector<const SymbolTable*> table_of(symbols.size(), &table);
  const std::vector<uint8_t> stream = RangeEncode(symbols, table_of);
  CHECK(stream.size() <= 2 + 5);
  CHECK(RangeDecode(stream, table_of) == symbols);
  CHECK(CrossEntropyBits(symbols, table_of) == 0.0);
}

TEST_CASE("out-of-range symbols are rejected at encode time") {
  const SymbolTable table = BuildSymbolTable({0.25, 0.5, 0.25}, -1, 1);
  const std::vector<const SymbolTable*> table_of(1, &table);
  CHECK_THROWS_AS(RangeEncode({2}, table_of), Error);
  CHECK_THROWS_AS(RangeEncode({-2}, table_of), Error);
}

}  // namespace
}  // namespace ntscc
