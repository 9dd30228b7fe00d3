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


#ifndef SCALEFORM_IMAGE_IO_HPP_
#define SCALEFORM_IMAGE_IO_HPP_

#include <filesystem>
#include <vector>

#include "scaleform/tensor.hpp"

namespace scaleform::io {

// Binary PPM (P6, maxval 255). Images are [3,H,W] in [0, 1].
Tensor read_ppm(const std::filesystem::path& path);
// Accepts [3,H,W] or [1,3,H,W]; values are clamped and rounded to 8 bits.
void write_ppm(const std::filesystem::path& path, const Tensor& image);

// Dispatches on extension: .ppm or .ftns (lossless float fixture).
Tensor load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Tensor& image);

// Sorted .ppm/.ftns files directly inside `dir`.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace scaleform::io

#endif  // SCALEFORM_IMAGE_IO_HPP_
