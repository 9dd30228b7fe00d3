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


#include "scaleform/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "scaleform/errors.hpp"
#include "scaleform/ftns.hpp"

namespace scaleform {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'F', 'F', 'C', 'K'};

void write_string(std::ostream& os, const std::string& s) {
  ftns::write_u64(os, s.size());
  os.write(s.data(), std::streamsize(s.size()));
}

std::string read_string(std::istream& is, std::uint64_t limit) {
  const std::uint64_t n = ftns::read_u64(is);
  if (n > limit) throw FormatError("checkpoint string length out of range");
  std::string s(n, '\0');
  is.read(s.data(), std::streamsize(n));
  if (std::uint64_t(is.gcount()) != n) throw FormatError("truncated checkpoint");
  return s;
}

}  // namespace

void save_checkpoint(const fs::path& path, const Checkpoint& ck) {
  const std::size_t n = ck.params.size();
  if (ck.adam.m.size() != n || ck.adam.v.size() != n) {
    throw UsageError("Adam state does not match the parameter list");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw FormatError("cannot write " + tmp.string());
    os.write(kMagic, 4);
    ftns::write_u32(os, kCheckpointVersion);
    ftns::write_u64(os, ck.iteration);
    ftns::write_u64(os, ck.rng_seed);
    ftns::write_u64(os, ck.rng_counter);
    write_string(os, ck.config_text);
    ftns::write_u64(os, ck.adam.step);
    ftns::write_u64(os, n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& name = ck.params[i].first;
      ftns::write_u32(os, std::uint32_t(name.size()));
      os.write(name.data(), std::streamsize(name.size()));
      ftns::write(os, ck.params[i].second);
      ftns::write(os, ck.adam.m[i]);
      ftns::write(os, ck.adam.v[i]);
    }
    if (!os) throw FormatError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path.string());
  char magic[4] = {};
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path.string() + ": not an FFCK checkpoint");
  }
  const std::uint32_t version = ftns::read_u32(is);
  if (version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.iteration = ftns::read_u64(is);
  ck.rng_seed = ftns::read_u64(is);
  ck.rng_counter = ftns::read_u64(is);
  ck.config_text = read_string(is, std::uint64_t(1) << 24);
  ck.adam.step = ftns::read_u64(is);
  const std::uint64_t n = ftns::read_u64(is);
  if (n > (std::uint64_t(1) << 20)) throw FormatError("checkpoint parameter count out of range");
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint32_t len = ftns::read_u32(is);
    if (len > 4096) throw FormatError("checkpoint parameter name too long");
    std::string name(len, '\0');
    is.read(name.data(), len);
    if (is.gcount() != std::streamsize(len)) throw FormatError("truncated checkpoint");
    Tensor p = ftns::read(is);
    Tensor m = ftns::read(is);
    Tensor v = ftns::read(is);
    if (m.shape() != p.shape() || v.shape() != p.shape()) {
      throw FormatError("moment shape mismatch for " + name);
    }
    ck.params.emplace_back(std::move(name), std::move(p));
    ck.adam.m.push_back(std::move(m));
    ck.adam.v.push_back(std::move(v));
  }
  return ck;
}

}  // namespace scaleform
