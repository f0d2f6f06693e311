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

#ifndef NTSCC_TRAINING_ENGINE_HPP_
#define NTSCC_TRAINING_ENGINE_HPP_

#include <set>
#include <string>
#include <vector>

#include "ntscc/channel_sim.hpp"
#include "ntscc/model.hpp"
#include "ntscc/source_pipeline.hpp"

namespace ntscc {

// Adam update over the named subset that actually took part in the step.
// Parameters carrying a rate tag are additionally skipped when their rate was
// not allocated anywhere in the batch; skipped parameters keep value, moments
// and step count bit-identical.
void AdamStep(ParamStore& ps, const std::set<std::string>& touched,
              const std::set<int>& used_rates, double lr);
void ResetOptimizerState(ParamStore& ps);

struct TrainLogEntry {
  std::string phase;
  int step = 0;
  double loss = 0;
  double distortion = 0;      // transmission path (or the only path)
  double distortion_ntc = 0;  // quantized autoencoder path
  double rate_y = 0, rate_z = 0;  // channel-symbol equivalents per image
  double avg_ky = 0;              // mean allocated symbols per image
};

// Two-phase training: a source-coding phase that shapes the transforms and
// entropy model under quantization noise, then a joint phase that trains the
// channel codec and bandwidth allocation end to end over the simulated
// channel.  All randomness is derived from named substreams of the config
// seed keyed by the global step, so a run resumed from a checkpoint replays
// bit-identically.
class Trainer {
 public:
  Trainer(System& sys, Dataset dataset);

  void PretrainNtc(int steps);
  void TrainNtscc(int steps);

  // Progress travels inside the checkpoint note.
  std::string ProgressNote() const;
  void ParseProgressNote(const std::string& note);

  int ntc_step() const { return ntc_step_; }
  int ntscc_step() const { return ntscc_step_; }
  const std::vector<TrainLogEntry>& log() const { return log_; }

 private:
  TrainLogEntry NtcStep(int step);
  TrainLogEntry NtsccStep(int step);
  const SourceImage& Pick(Rng& rng) const;

  System& sys_;
  Dataset data_;
  int ntc_step_ = 0;
  int ntscc_step_ = 0;
  std::vector<TrainLogEntry> log_;
};

// One image through the transmitter: analysis, hyper coding, bandwidth
// allocation, channel encoding.  The Transmission is everything that crosses
// the channel.
struct EncodeResult {
  Transmission tx;
  RateAllocation alloc;
  BandwidthLedger ledger;
  int clamped = 0;  // hyper symbols clipped into the coder support
};

EncodeResult AliceEncode(System& sys, const Tensor& image, double snr_db,
                         double eta_override = -1.0);

struct DecodeResult {
  Tensor reconstruction;  // (h, w, 3), clipped to [0, 1]
  RateAllocation alloc;
};

// Applies channel noise to the received symbols and reconstructs.
DecodeResult BobDecode(System& sys, const Transmission& tx, Rng& channel_rng);

struct TransmitResult {
  Tensor reconstruction;
  RateAllocation alloc;
  BandwidthLedger ledger;
  std::vector<uint8_t> wire;
  int clamped = 0;
};

// Full link: encode, serialize, parse, add noise, decode.  Every call
// exercises the wire format.
TransmitResult Transmit(System& sys, const Tensor& image, double snr_db,
                        Rng& channel_rng, double eta_override = -1.0);

}  // namespace ntscc

#endif  // NTSCC_TRAINING_ENGINE_HPP_
