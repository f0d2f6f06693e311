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

#include "ntscc/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ntscc/rng.hpp"
#include "ntscc/tensor.hpp"

namespace ntscc {

namespace {

std::string Trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

const char* const kKnownKeys[] = {
    "seed", "snr_db", "model.kind", "model.fixed_rate_v",
    "transform.stages", "transform.blocks", "transform.embed_dim",
    "transform.heads", "transform.window", "transform.mlp_ratio",
    "transform.hyper_channels", "transform.sigma_min",
    "rate.values", "rate.kq", "rate.eta",
    "codec.enc_blocks", "codec.dec_blocks", "codec.heads",
    "dataset.kind", "dataset.folder", "dataset.crop", "dataset.seed",
    "dataset.count",
    "eval.kind", "eval.folder", "eval.crop", "eval.seed", "eval.count",
    "train.lambda", "train.lr", "train.batch", "train.steps_ntc",
    "train.steps_ntscc", "train.snr_db", "train.distortion", "train.seed",
    "train.log_every",
};

}  // namespace

Config Config::FromFile(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("io: cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return FromText(ss.str());
}

Config Config::FromText(const std::string& text) {
  Config c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config: line " + std::to_string(lineno) +
                  " is not key=value: " + line);
    c.Set(Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
  }
  return c;
}

void Config::Set(const std::string& key, const std::string& value) {
  if (key.empty()) throw Error("config: empty key");
  kv_[key] = value;
}

void Config::SetKv(const std::string& kv) {
  size_t eq = kv.find('=');
  if (eq == std::string::npos)
    throw Error("config: --set wants key=value, got " + kv);
  Set(Trim(kv.substr(0, eq)), Trim(kv.substr(eq + 1)));
}

std::string Config::GetStr(const std::string& key, const std::string& dflt) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? dflt : it->second;
}

int64_t Config::GetInt(const std::string& key, int64_t dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  try {
    size_t pos = 0;
    int64_t v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw Error("config: " + key + " is not an integer: " + it->second);
  }
}

double Config::GetDouble(const std::string& key, double dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw Error("config: " + key + " is not a number: " + it->second);
  }
}

bool Config::GetBool(const std::string& key, bool dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  const std::string& v = it->second;
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error("config: " + key + " is not a bool: " + v);
}

std::vector<int> Config::GetIntList(const std::string& key,
                                    const std::vector<int>& dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  std::vector<int> out;
  std::istringstream is(it->second);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    tok = Trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoi(tok));
    } catch (...) {
      throw Error("config: " + key + " has a bad list entry: " + tok);
    }
  }
  if (out.empty()) throw Error("config: " + key + " is an empty list");
  return out;
}

std::string Config::CanonicalText() const {
  std::ostringstream os;
  for (const auto& [k, v] : kv_) os << k << "=" << v << "\n";
  return os.str();
}

uint64_t Config::Hash() const {
  std::string t = CanonicalText();
  return HashName(t);
}

std::string ModelKindName(ModelKind k) {
  switch (k) {
    case ModelKind::kNtscc: return "ntscc";
    case ModelKind::kNtsccNoSideInfo: return "ntscc_nosi";
    case ModelKind::kFixedJscc: return "fixed_jscc";
  }
  return "?";
}

SystemConfig SystemConfig::FromConfig(const Config& c) {
  for (const auto& [k, v] : c.entries()) {
    bool known = false;
    for (const char* kk : kKnownKeys) known = known || k == kk;
    if (!known) throw Error("config: unknown key " + k);
  }

  SystemConfig s;
  s.seed = static_cast<uint64_t>(c.GetInt("seed", 1));
  s.snr_db = c.GetDouble("snr_db", 10.0);

  std::string kind = c.GetStr("model.kind", "ntscc");
  if (kind == "ntscc") s.kind = ModelKind::kNtscc;
  else if (kind == "ntscc_nosi") s.kind = ModelKind::kNtsccNoSideInfo;
  else if (kind == "fixed_jscc") s.kind = ModelKind::kFixedJscc;
  else throw Error("config: unknown model.kind " + kind);
  s.fixed_rate_v = static_cast<int>(c.GetInt("model.fixed_rate_v", 16));

  TransformConfig& t = s.transform;
  t.stages = static_cast<int>(c.GetInt("transform.stages", 2));
  t.blocks = c.GetIntList("transform.blocks", {2, 6});
  t.embed_dim = static_cast<int>(c.GetInt("transform.embed_dim", 128));
  t.heads = static_cast<int>(c.GetInt("transform.heads", 8));
  t.window = static_cast<int>(c.GetInt("transform.window", 8));
  t.mlp_ratio = c.GetDouble("transform.mlp_ratio", 2.0);
  t.hyper_channels = static_cast<int>(c.GetInt("transform.hyper_channels", 0));
  t.sigma_min = c.GetDouble("transform.sigma_min", 0.05);

  RateConfig& r = s.rate;
  r.values = c.GetIntList("rate.values", r.values);
  r.kq = static_cast<int>(c.GetInt("rate.kq", 4));
  r.eta = c.GetDouble("rate.eta", 0.2);

  CodecConfig& cc = s.codec;
  cc.enc_blocks = static_cast<int>(c.GetInt("codec.enc_blocks", 4));
  cc.dec_blocks = static_cast<int>(c.GetInt("codec.dec_blocks", 4));
  cc.heads = static_cast<int>(c.GetInt("codec.heads", 8));

  DatasetSpec& d = s.dataset;
  d.kind = c.GetStr("dataset.kind", "synthetic");
  d.folder = c.GetStr("dataset.folder", "");
  d.crop = static_cast<int>(c.GetInt("dataset.crop", 32));
  d.seed = static_cast<uint64_t>(c.GetInt("dataset.seed", static_cast<int64_t>(s.seed)));
  d.count = static_cast<int>(c.GetInt("dataset.count", 64));

  DatasetSpec& e = s.eval_dataset;
  e.kind = c.GetStr("eval.kind", d.kind);
  e.folder = c.GetStr("eval.folder", d.folder);
  e.crop = static_cast<int>(c.GetInt("eval.crop", d.crop));
  e.seed = static_cast<uint64_t>(c.GetInt("eval.seed", static_cast<int64_t>(d.seed + 1000003)));
  e.count = static_cast<int>(c.GetInt("eval.count", 16));

  TrainConfig& tr = s.train;
  tr.lambda = c.GetDouble("train.lambda", 16.0);
  tr.lr = c.GetDouble("train.lr", 1e-4);
  tr.batch = static_cast<int>(c.GetInt("train.batch", 10));
  tr.steps_ntc = static_cast<int>(c.GetInt("train.steps_ntc", 200));
  tr.steps_ntscc = static_cast<int>(c.GetInt("train.steps_ntscc", 200));
  tr.snr_db = c.GetDouble("train.snr_db", s.snr_db);
  tr.distortion = c.GetStr("train.distortion", "mse");
  tr.seed = static_cast<uint64_t>(c.GetInt("train.seed", static_cast<int64_t>(s.seed)));
  tr.log_every = static_cast<int>(c.GetInt("train.log_every", 25));

  s.Validate();
  return s;
}

void SystemConfig::Validate() const {
  const TransformConfig& t = transform;
  if (t.stages < 1 || t.stages > 6) throw Error("config: stages out of range");
  if (static_cast<int>(t.blocks.size()) != t.stages)
    throw Error("config: transform.blocks needs one entry per stage");
  for (int b : t.blocks)
    if (b < 1) throw Error("config: block counts must be positive");
  if (t.embed_dim < 1 || t.heads < 1 || t.embed_dim % t.heads != 0)
    throw Error("config: heads must divide embed_dim");
  if (t.mlp_ratio <= 0) throw Error("config: mlp_ratio must be positive");
  if (t.sigma_min <= 0) throw Error("config: sigma_min must be positive");

  if (rate.kq < 0 || rate.kq > 16) throw Error("config: rate.kq out of range");
  if (static_cast<size_t>(1) << rate.kq != rate.values.size())
    throw Error("config: rate.values size must equal 2^rate.kq");
  for (size_t i = 0; i < rate.values.size(); ++i) {
    if (rate.values[i] < 1)
      throw Error("config: rate values must be positive");
    if (i > 0 && rate.values[i] <= rate.values[i - 1])
      throw Error("config: rate.values must be strictly increasing");
    if (rate.values[i] > transform.embed_dim)
      throw Error("config: rate value exceeds embed_dim");
  }
  if (rate.eta <= 0) throw Error("config: rate.eta must be positive");

  if (kind == ModelKind::kFixedJscc &&
      (fixed_rate_v < 1 || fixed_rate_v > transform.embed_dim))
    throw Error("config: model.fixed_rate_v out of range");

  if (dataset.kind != "synthetic" && dataset.kind != "folder")
    throw Error("config: dataset.kind must be synthetic or folder");
  if (dataset.kind == "folder" && dataset.folder.empty())
    throw Error("config: dataset.folder is required for folder datasets");
  int ds = transform.downsample();
  if (dataset.crop <= 0 || dataset.crop % ds != 0)
    throw Error("config: dataset.crop must be a positive multiple of " +
                std::to_string(ds));
  if (eval_dataset.crop <= 0 || eval_dataset.crop % ds != 0)
    throw Error("config: eval.crop must be a positive multiple of " +
                std::to_string(ds));
  if (dataset.count < 1 || eval_dataset.count < 1)
    throw Error("config: dataset counts must be positive");

  if (train.batch < 1) throw Error("config: train.batch must be positive");
  if (train.lambda <= 0) throw Error("config: train.lambda must be positive");
  if (train.lr <= 0) throw Error("config: train.lr must be positive");
  if (train.distortion != "mse" && train.distortion != "msssim")
    throw Error("config: train.distortion must be mse or msssim");

  // The latent grid must admit the window and two hyper downsamplings.
  int grid = dataset.crop;
  for (int s = 0; s < t.stages; ++s) {
    grid /= 2;
    int win = std::min(t.window, grid);
    if (grid % win != 0)
      throw Error("config: stage grid " + std::to_string(grid) +
                  " not tiled by window");
  }
  if (grid < 4 || grid % 4 != 0)
    throw Error("config: latent grid must be a multiple of 4 for the hyper path");
}

}  // namespace ntscc
