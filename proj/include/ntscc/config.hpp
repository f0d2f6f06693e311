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

#ifndef NTSCC_CONFIG_HPP_
#define NTSCC_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ntscc {

// Flat key=value configuration.  '#' starts a comment; keys are dotted
// (e.g. transform.embed_dim).  Unknown keys are rejected when converted to a
// SystemConfig so typos fail loudly.
class Config {
 public:
  static Config FromFile(const std::string& path);
  static Config FromText(const std::string& text);

  void Set(const std::string& key, const std::string& value);
  // Parses "key=value".
  void SetKv(const std::string& kv);
  bool Has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string GetStr(const std::string& key, const std::string& dflt) const;
  int64_t GetInt(const std::string& key, int64_t dflt) const;
  double GetDouble(const std::string& key, double dflt) const;
  bool GetBool(const std::string& key, bool dflt) const;
  std::vector<int> GetIntList(const std::string& key,
                              const std::vector<int>& dflt) const;

  // Sorted "key=value" lines; the canonical form that gets hashed/logged.
  std::string CanonicalText() const;
  uint64_t Hash() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

struct TransformConfig {
  int stages = 2;
  std::vector<int> blocks = {2, 6};
  int embed_dim = 128;
  int heads = 8;
  int window = 8;
  double mlp_ratio = 2.0;
  int hyper_channels = 0;  // 0 means embed_dim
  double sigma_min = 0.05;

  int hyper_ch() const { return hyper_channels > 0 ? hyper_channels : embed_dim; }
  int downsample() const { return 1 << stages; }
};

struct RateConfig {
  // 2^kq entries, each at most transform.embed_dim.
  std::vector<int> values = {8,  16, 24, 32, 40, 48, 56, 64,
                             72, 80, 88, 96, 104, 112, 120, 128};
  int kq = 4;
  double eta = 0.2;
};

enum class ModelKind { kNtscc, kNtsccNoSideInfo, kFixedJscc };

struct CodecConfig {
  int enc_blocks = 4;
  int dec_blocks = 4;
  int heads = 8;
};

struct DatasetSpec {
  std::string kind = "synthetic";  // "synthetic" or "folder"
  std::string folder;
  int crop = 32;
  uint64_t seed = 1;
  int count = 64;
};

struct TrainConfig {
  double lambda = 16.0;
  double lr = 1e-4;
  int batch = 10;
  int steps_ntc = 200;
  int steps_ntscc = 200;
  double snr_db = 10.0;
  std::string distortion = "mse";  // "mse" or "msssim"
  uint64_t seed = 1;
  int log_every = 25;
};

struct SystemConfig {
  TransformConfig transform;
  RateConfig rate;
  CodecConfig codec;
  DatasetSpec dataset;
  DatasetSpec eval_dataset;
  TrainConfig train;
  ModelKind kind = ModelKind::kNtscc;
  int fixed_rate_v = 16;  // used by kFixedJscc
  double snr_db = 10.0;   // channel at evaluation
  uint64_t seed = 1;

  static SystemConfig FromConfig(const Config& c);
  void Validate() const;
  bool side_info() const { return kind == ModelKind::kNtscc; }
  bool rate_adaptive() const { return kind != ModelKind::kFixedJscc; }
};

std::string ModelKindName(ModelKind k);

}  // namespace ntscc

#endif  // NTSCC_CONFIG_HPP_
