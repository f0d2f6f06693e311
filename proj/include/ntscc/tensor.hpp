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

#ifndef NTSCC_TENSOR_HPP_
#define NTSCC_TENSOR_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <new>
#include <vector>

namespace ntscc {

// All errors thrown by this library.  The message begins with a category
// prefix such as "config:", "io:", "shape:" or "framing:".
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Eigen's vectorized kernels peel loops differently depending on the runtime
// alignment of the mapped pointer, which would make reduction order (and so
// the last ulp of bias gradients) depend on heap history.  Pinning every
// tensor buffer to one alignment keeps training bit-reproducible.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlign = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(kAlign)));
  }
  void deallocate(T* p, std::size_t) {
    ::operator delete(p, std::align_val_t(kAlign));
  }
  bool operator==(const AlignedAllocator&) const { return true; }
  bool operator!=(const AlignedAllocator&) const { return false; }
};

// Dense row-major double tensor.  Rank is small (<= 4); shape arithmetic is
// kept out of the hot path by precomputing index tables elsewhere.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> dims);
  static Tensor Zeros(std::vector<int64_t> dims) { return Tensor(std::move(dims)); }
  static Tensor Full(std::vector<int64_t> dims, double v);
  static Tensor Scalar(double v);

  const std::vector<int64_t>& dims() const { return dims_; }
  int64_t dim(size_t i) const { return dims_.at(i); }
  size_t ndim() const { return dims_.size(); }
  int64_t numel() const { return static_cast<int64_t>(v_.size()); }
  bool empty() const { return v_.empty(); }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double& operator[](int64_t i) { return v_[i]; }
  double operator[](int64_t i) const { return v_[i]; }

  double& At(int64_t i, int64_t j) { return v_[i * dims_[1] + j]; }
  double At(int64_t i, int64_t j) const { return v_[i * dims_[1] + j]; }
  double& At(int64_t i, int64_t j, int64_t k) {
    return v_[(i * dims_[1] + j) * dims_[2] + k];
  }
  double At(int64_t i, int64_t j, int64_t k) const {
    return v_[(i * dims_[1] + j) * dims_[2] + k];
  }

  void Fill(double v);
  void SetZero() { Fill(0.0); }

  // Returns a copy with a new shape; element count must match.
  Tensor Reshaped(std::vector<int64_t> dims) const;

  // In-place reshape, element count must match.
  void SetDims(std::vector<int64_t> dims);

  bool SameShape(const Tensor& o) const { return dims_ == o.dims_; }

  std::string ShapeStr() const;

 private:
  std::vector<int64_t> dims_;
  std::vector<double, AlignedAllocator<double>> v_;
};

int64_t NumelOf(const std::vector<int64_t>& dims);

}  // namespace ntscc

#endif  // NTSCC_TENSOR_HPP_
