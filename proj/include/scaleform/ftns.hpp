// Copyright (c) the Scaleform authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCALEFORM_FTNS_HPP_
#define SCALEFORM_FTNS_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "scaleform/tensor.hpp"

// Raw tensor file format:
//   "FTNS" | u32 version (=1) | u32 ndim | u64 dims[ndim] | u8 dtype | payload
// dtype 0 = float64, 1 = float32. All integers and payload little-endian.
namespace scaleform::ftns {

inline constexpr std::uint32_t kVersion = 1;

enum class DType : std::uint8_t { kFloat64 = 0, kFloat32 = 1 };

void write(std::ostream& os, const Tensor& t, DType dtype = DType::kFloat64);
Tensor read(std::istream& is);

void save(const std::filesystem::path& path, const Tensor& t, DType dtype = DType::kFloat64);
Tensor load(const std::filesystem::path& path);

// Little-endian primitives shared with the checkpoint container.
void write_u8(std::ostream& os, std::uint8_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
std::uint8_t read_u8(std::istream& is);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);

}  // namespace scaleform::ftns

#endif  // SCALEFORM_FTNS_HPP_
