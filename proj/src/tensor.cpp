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

#include "ntscc/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace ntscc {

int64_t NumelOf(const std::vector<int64_t>& dims) {
  int64_t n = 1;
  for (int64_t d : dims) {
    if (d < 0) throw Error("shape: negative dimension");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int64_t> dims) : dims_(std::move(dims)) {
  v_.assign(static_cast<size_t>(NumelOf(dims_)), 0.0);
}

Tensor Tensor::Full(std::vector<int64_t> dims, double v) {
  Tensor t(std::move(dims));
  t.Fill(v);
  return t;
}

Tensor Tensor::Scalar(double v) {
  Tensor t({1});
  t.v_[0] = v;
  return t;
}

void Tensor::Fill(double v) { std::fill(v_.begin(), v_.end(), v); }

Tensor Tensor::Reshaped(std::vector<int64_t> dims) const {
  Tensor t = *this;
  t.SetDims(std::move(dims));
  return t;
}

void Tensor::SetDims(std::vector<int64_t> dims) {
  if (NumelOf(dims) != numel())
    throw Error("shape: reshape element count mismatch");
  dims_ = std::move(dims);
}

std::string Tensor::ShapeStr() const {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < dims_.size(); ++i)
    os << dims_[i] << (i + 1 < dims_.size() ? "," : "");
  os << ")";
  return os.str();
}

}  // namespace ntscc
