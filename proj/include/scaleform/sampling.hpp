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

#ifndef SCALEFORM_SAMPLING_HPP_
#define SCALEFORM_SAMPLING_HPP_

#include <cstddef>

#include "scaleform/tensor.hpp"

namespace scaleform {

// Continuous source coordinate of destination pixel `dst` under magnification
// `factor`, with pixel centers at half-integers: (dst + 0.5) / factor - 0.5.
inline double half_pixel_source(std::size_t dst, double factor) {
  return (static_cast<double>(dst) + 0.5) / factor - 0.5;
}

// round(extent * factor), ties to even.
std::size_t scaled_extent(std::size_t extent, double factor);

// Two-tap linear interpolation support of a coordinate clamped to [0, n-1].
struct LinearTaps {
  std::size_t lo;
  std::size_t hi;
  double frac;  // weight of `hi`
  bool clamped;  // coordinate was outside [0, n-1]
};

LinearTaps linear_taps(double coord, std::size_t n);

// Bilinear resampling of the last two axes of x to (out_h, out_w), mapping
// destination pixels through half_pixel_source with the given per-axis
// magnification. Out-of-range coordinates clamp to the edge. Differentiable in x.
Tensor resample_bilinear(const Tensor& x, std::size_t out_h, std::size_t out_w,
                         double factor_v, double factor_h);

// Resize of the last two axes using factor = out / in per axis.
Tensor resize_bilinear(const Tensor& x, std::size_t out_h, std::size_t out_w);

// Nearest-neighbour 2x upsample of the last two axes.
Tensor upsample_nearest2x(const Tensor& x);

// Edge-replicate pad of the last two axes at the bottom/right to (out_h, out_w).
Tensor pad_edge(const Tensor& x, std::size_t out_h, std::size_t out_w);

// Top-left crop of the last two axes.
Tensor crop(const Tensor& x, std::size_t out_h, std::size_t out_w);

}  // namespace scaleform

#endif  // SCALEFORM_SAMPLING_HPP_
