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

#ifndef NTSCC_CHANNEL_SIM_HPP_
#define NTSCC_CHANNEL_SIM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ntscc/rng.hpp"
#include "ntscc/tensor.hpp"

namespace ntscc {

// For unit-power signals, the AWGN noise variance at a given SNR.
double NoiseSigma(double snr_db);

// Shannon capacity of the side channel, bits per symbol.
double CapacityBitsPerSymbol(double snr_db);

// IID gaussian noise of the given shape for one channel use.
Tensor AwgnNoise(const std::vector<int64_t>& dims, double snr_db, Rng& rng);

// Channel bandwidth bookkeeping, in channel symbols.  Side information
// (hyper latent stream and rate map) is charged at capacity: bits divided by
// log2(1 + snr).
struct BandwidthLedger {
  double ky = 0;  // semantic feature symbols
  double kz = 0;  // hyper latent side link
  double kr = 0;  // rate map side link
  double total() const { return ky + kz + kr; }
};

double Cbr(const BandwidthLedger& l, int64_t source_dims);

// Serialized transmission: a little-endian header, the packed rate map, the
// range-coded hyper latent stream and the analog symbols as float64.
// snr_db is carried as integer milli-dB so the header stays all-integer.
struct Transmission {
  uint32_t grid_h = 0, grid_w = 0;
  uint32_t kq = 0;
  std::vector<uint32_t> rate_values;
  int32_t snr_milli_db = 0;
  std::vector<uint8_t> rate_map;
  std::vector<uint8_t> z_stream;
  std::vector<double> symbols;
};

std::vector<uint8_t> SerializeTransmission(const Transmission& t);
Transmission ParseTransmission(const std::vector<uint8_t>& bytes);

void WriteFileAtomic(const std::string& path, const std::vector<uint8_t>& bytes);
std::vector<uint8_t> ReadFileBytes(const std::string& path);

}  // namespace ntscc

#endif  // NTSCC_CHANNEL_SIM_HPP_
