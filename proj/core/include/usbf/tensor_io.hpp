/*
 * Copyright 2026 The usbf Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace usbf {

/// Dense float32 tensor, row-major.
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint64_t> d, std::vector<float> v);

  std::uint64_t element_count() const;
};

inline constexpr char kTensorMagic[4] = {'U', 'S', 'B', 'F'};
inline constexpr std::uint32_t kTensorVersion = 1;

// Single tensor:   "USBF" u32 version u32 ndim u64 dims[ndim] f32 data[prod(dims)]
// Record sequence: "USBF" u32 version u64 count, then count x (u32 ndim u64 dims[] f32 data[])
// All integers and floats little-endian.

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);
void write_records(std::ostream& os, const std::vector<Tensor>& records);
std::vector<Tensor> read_records(std::istream& is);

void write_tensor_file(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor_file(const std::filesystem::path& path);
void write_records_file(const std::filesystem::path& path, const std::vector<Tensor>& records);
std::vector<Tensor> read_records_file(const std::filesystem::path& path);

/// Binary P5 greymap; pixels in [0, 1] are rounded to 0..255. Row-major [height x width].
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<double>& pixels);

}  // namespace usbf
