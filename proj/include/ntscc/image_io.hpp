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

#ifndef NTSCC_IMAGE_IO_HPP_
#define NTSCC_IMAGE_IO_HPP_

#include <string>

#include "ntscc/tensor.hpp"

namespace ntscc {

// Reads a PNG or binary PPM/PGM into an (h, w, 3) tensor in [0, 1].
Tensor ReadImage(const std::string& path);

// 8-bit outputs; values are clipped to [0, 1] before scaling.
void WritePpm(const std::string& path, const Tensor& img);
void WritePng(const std::string& path, const Tensor& img);

}  // namespace ntscc

#endif  // NTSCC_IMAGE_IO_HPP_
