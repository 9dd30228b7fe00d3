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

#include "scaleform/ftns.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "scaleform/errors.hpp"

namespace scaleform::ftns {

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>(v & 0xFF);
    v >>= 8;
  }
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw FormatError("unexpected end of tensor stream");
  }
  T v = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) v = static_cast<T>((v << 8) | bytes[i]);
  return v;
}

constexpr char kMagic[4] = {'F', 'T', 'N', 'S'};
constexpr std::uint32_t kMaxDims = 16;

}  // namespace

void write_u8(std::ostream& os, std::uint8_t v) { put_le(os, v); }
void write_u32(std::ostream& os, std::uint32_t v) { put_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { put_le(os, v); }
void write_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }
std::uint8_t read_u8(std::istream& is) { return get_le<std::uint8_t>(is); }
std::uint32_t read_u32(std::istream& is) { return get_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return get_le<std::uint64_t>(is); }
double read_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

void write(std::ostream& os, const Tensor& t, DType dtype) {
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(t.ndim()));
  for (std::size_t d : t.shape()) write_u64(os, d);
  write_u8(os, static_cast<std::uint8_t>(dtype));
  for (double v : t.data()) {
    if (dtype == DType::kFloat64) {
      write_f64(os, v);
    } else {
      write_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  if (!os) throw FormatError("failed writing tensor stream");
}

Tensor read(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad FTNS magic");
  }
  const std::uint32_t version = read_u32(is);
  if (version != kVersion) throw FormatError("unsupported FTNS version " + std::to_string(version));
  const std::uint32_t ndim = read_u32(is);
  if (ndim == 0 || ndim > kMaxDims) throw FormatError("bad FTNS rank");
  Shape shape(ndim);
  for (auto& d : shape) {
    d = read_u64(is);
    if (d == 0 || d > (std::uint64_t{1} << 32)) throw FormatError("bad FTNS dimension");
  }
  const auto dtype = static_cast<DType>(read_u8(is));
  if (dtype != DType::kFloat64 && dtype != DType::kFloat32) throw FormatError("bad FTNS dtype");
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) {
    v = dtype == DType::kFloat64 ? read_f64(is)
                                 : static_cast<double>(std::bit_cast<float>(read_u32(is)));
  }
  return Tensor(std::move(shape), std::move(data));
}

void save(const std::filesystem::path& path, const Tensor& t, DType dtype) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write(os, t, dtype);
}

Tensor load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read(is);
}

}  // namespace scaleform::ftns
