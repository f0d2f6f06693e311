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

#include "ntscc/rate_allocator.hpp"
#include "ntscc/tensor.hpp"
#include "ntscc/rng.hpp"

using namespace ntscc;

namespace {

RateConfig SmallRates() {
  RateConfig r;
  r.values = {4, 8, 12, 16};
  r.kq = 2;
  return r;
}

}  // namespace

TEST_CASE("allocation snaps each patch to the nearest bandwidth") {
  RateConfig r = SmallRates();
  // 5 -> 4 (distance 1 vs 3), 11 -> 12, 13 -> 12.
  RateAllocation a = Allocate({5.0, 11.0, 13.0}, r);
  CHECK(a.symbols == std::vector<int>{4, 12, 12});
  CHECK(a.index == std::vector<int>{0, 2, 2});
  CHECK(a.total_symbols == 28);
}

TEST_CASE("ties round up to the larger bandwidth") {
  RateConfig r = SmallRates();
  RateAllocation a = Allocate({6.0, 10.0, 14.0}, r);
  CHECK(a.symbols == std::vector<int>{8, 12, 16});
}

TEST_CASE("out-of-range demands clamp to the ends") {
  RateConfig r = SmallRates();
  RateAllocation a = Allocate({-3.0, 0.0, 1000.0}, r);
  CHECK(a.symbols == std::vector<int>{4, 4, 16});
}

TEST_CASE("uniform allocation covers every patch with one value") {
  RateAllocation a = AllocateUniform(6, 10);
  CHECK(a.num_patches() == 6);
  CHECK(a.total_symbols == 60);
  for (int s : a.symbols) CHECK(s == 10);
  for (int i : a.index) CHECK(i == 0);
}

TEST_CASE("rate map packs indices most significant bit first") {
  RateConfig r = SmallRates();
  RateAllocation a = AllocationFromIndices({1, 2, 3, 0}, r);
  std::vector<uint8_t> bytes = PackRateMap(a, 2);
  // 01 10 11 00 -> 0x6C.
  REQUIRE(bytes.size() == 1);
  CHECK(bytes[0] == 0x6C);
  CHECK(UnpackRateMap(bytes, 4, 2) == std::vector<int>{1, 2, 3, 0});
}

TEST_CASE("rate map roundtrips at awkward widths") {
  Rng rng(9);
  for (int kq : {1, 3, 4, 5, 7}) {
    RateConfig r;
    r.values.clear();
    for (int i = 0; i < (1 << kq); ++i) r.values.push_back(i + 1);
    r.kq = kq;
    for (int n : {1, 5, 8, 33}) {
      std::vector<int> idx(n);
      for (int& v : idx) v = static_cast<int>(rng.Below(1u << kq));
      RateAllocation a = AllocationFromIndices(idx, r);
      std::vector<uint8_t> bytes = PackRateMap(a, kq);
      CHECK(static_cast<int>(bytes.size()) == (n * kq + 7) / 8);
      CHECK(UnpackRateMap(bytes, n, kq) == idx);
    }
  }
}

TEST_CASE("zero-width rate map is empty") {
  RateConfig r;
  r.values = {7};
  r.kq = 0;
  RateAllocation a = AllocationFromIndices({0, 0, 0}, r);
  std::vector<uint8_t> bytes = PackRateMap(a, 0);
  CHECK(bytes.empty());
  CHECK(UnpackRateMap(bytes, 3, 0) == std::vector<int>{0, 0, 0});
}

TEST_CASE("malformed rate maps are rejected") {
  RateConfig r = SmallRates();
  RateAllocation a = AllocationFromIndices({1, 2, 3, 0, 1}, r);
  std::vector<uint8_t> bytes = PackRateMap(a, 2);
  bytes.pop_back();
  CHECK_THROWS_AS(UnpackRateMap(bytes, 5, 2), Error);
  CHECK_THROWS_AS(AllocationFromIndices({0, 4}, r), Error);  // index 4 of 4
}
