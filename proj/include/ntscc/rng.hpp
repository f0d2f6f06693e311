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

#ifndef NTSCC_RNG_HPP_
#define NTSCC_RNG_HPP_

#include <cstdint>
#include <string_view>

namespace ntscc {

// Deterministic, platform-independent PRNG (xoshiro256++ seeded via
// splitmix64).  std::normal_distribution is implementation-defined, so all
// floating-point draws are produced explicitly here; every stream of draws is
// byte-identical across platforms and runs for the same seed.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t U64();
  // Uniform in [0, 1), 53-bit resolution.
  double Uniform();
  // Uniform in (-0.5, 0.5); exact -0.5 is redrawn so the interval stays open.
  double UniformOffset();
  // Standard normal via Box-Muller (pairs cached).
  double Normal();
  // Uniform integer in [0, n).
  uint64_t Below(uint64_t n);

 private:
  uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

uint64_t SplitMix64(uint64_t& state);

// Hash of a stream name, for deriving named substreams.
uint64_t HashName(std::string_view name);

// Independent substream generator: (seed, name, index) fully determines the
// stream.  Used so that e.g. channel noise at step 17 does not depend on how
// many dataset draws happened before it.
Rng Substream(uint64_t seed, std::string_view name, uint64_t index);

// Derives a child seed from (seed, index).
uint64_t DeriveSeed(uint64_t seed, uint64_t index);

}  // namespace ntscc

#endif  // NTSCC_RNG_HPP_
