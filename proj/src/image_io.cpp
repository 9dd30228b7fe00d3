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


#include "scaleform/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "scaleform/errors.hpp"
#include "scaleform/ftns.hpp"

namespace scaleform::io {

namespace fs = std::filesystem;

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(char(c));
  }
  return tok;
}

std::size_t header_number(std::istream& in, const fs::path& path) {
  const std::string tok = header_token(in);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char ch) { return std::isdigit(ch); })) {
    throw FormatError(path.string() + ": malformed PPM header");
  }
  return std::stoul(tok);
}

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return e;
}

Tensor as_chw(const Tensor& image) {
  if (image.ndim() == 4 && image.dim(0) == 1 && image.dim(1) == 3) {
    return Tensor({3, image.dim(2), image.dim(3)},
                  std::vector<double>(image.data().begin(), image.data().end()));
  }
  if (image.ndim() != 3 || image.dim(0) != 3) {
    throw DimensionError("expected a [3,H,W] or [1,3,H,W] image");
  }
  return image;
}

}  // namespace

Tensor read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  if (header_token(in) != "P6") throw FormatError(path.string() + ": not a binary PPM (P6)");
  const std::size_t w = header_number(in, path);
  const std::size_t h = header_number(in, path);
  const std::size_t maxval = header_number(in, path);
  if (maxval != 255) throw FormatError(path.string() + ": only 8-bit PPM is supported");
  if (w == 0 || h == 0) throw FormatError(path.string() + ": empty image");
  std::vector<unsigned char> raw(w * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (std::size_t(in.gcount()) != raw.size()) throw FormatError(path.string() + ": truncated pixel data");
  std::vector<double> out(raw.size());
  const std::size_t plane = w * h;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) out[c * plane + i] = raw[i * 3 + c] / 255.0;
  }
  return Tensor({3, h, w}, std::move(out));
}

void write_ppm(const fs::path& path, const Tensor& image) {
  const Tensor img = as_chw(image);
  const std::size_t h = img.dim(1), w = img.dim(2), plane = h * w;
  std::vector<unsigned char> raw(plane * 3);
  const auto d = img.data();
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = std::clamp(d[c * plane + i], 0.0, 1.0);
      raw[i * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P6\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

Tensor load_image(const fs::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".ppm") return read_ppm(path);
  if (ext == ".ftns") return as_chw(ftns::load(path));
  throw FormatError(path.string() + ": unsupported image extension");
}

void save_image(const fs::path& path, const Tensor& image) {
  const std::string ext = lower_ext(path);
  if (ext == ".ppm") return write_ppm(path, image);
  if (ext == ".ftns") {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    return ftns::save(path, as_chw(image));
  }
  throw FormatError(path.string() + ": unsupported image extension");
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower_ext(entry.path());
    if (ext == ".ppm" || ext == ".ftns") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace scaleform::io
