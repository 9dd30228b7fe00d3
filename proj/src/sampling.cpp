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

#include "scaleform/sampling.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <memory>
#include <vector>

#include "scaleform/errors.hpp"
#include "scaleform/ops.hpp"

namespace scaleform {

std::size_t scaled_extent(std::size_t extent, double factor) {
  // nearbyint honours the current rounding mode, which is round-to-nearest-even
  // unless someone changed it.
  const double v = std::nearbyint(static_cast<double>(extent) * factor);
  return v < 1.0 ? 1 : static_cast<std::size_t>(v);
}

LinearTaps linear_taps(double coord, std::size_t n) {
  const double top = static_cast<double>(n - 1);
  LinearTaps t{};
  t.clamped = coord < 0.0 || coord > top;
  const double c = std::clamp(coord, 0.0, top);
  const double fl = std::floor(c);
  t.lo = static_cast<std::size_t>(fl);
  t.hi = std::min(t.lo + 1, n - 1);
  t.frac = c - fl;
  return t;
}

namespace {

struct Tap4 {
  std::size_t idx[4];
  double w[4];
};

}  // namespace

Tensor resample_bilinear(const Tensor& x, std::size_t out_h, std::size_t out_w,
                         double factor_v, double factor_h) {
  if (x.ndim() < 2) throw DimensionError("resample needs at least 2 axes");
  const std::size_t h = x.dim(-2), w = x.dim(-1);
  const std::size_t planes = x.numel() / (h * w);
  auto taps = std::make_shared<std::vector<Tap4>>(out_h * out_w);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const LinearTaps ty = linear_taps(half_pixel_source(oy, factor_v), h);
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const LinearTaps tx = linear_taps(half_pixel_source(ox, factor_h), w);
      Tap4& t = (*taps)[oy * out_w + ox];
      t.idx[0] = ty.lo * w + tx.lo;
      t.idx[1] = ty.lo * w + tx.hi;
      t.idx[2] = ty.hi * w + tx.lo;
      t.idx[3] = ty.hi * w + tx.hi;
      t.w[0] = (1.0 - ty.frac) * (1.0 - tx.frac);
      t.w[1] = (1.0 - ty.frac) * tx.frac;
      t.w[2] = ty.frac * (1.0 - tx.frac);
      t.w[3] = ty.frac * tx.frac;
    }
  }
  const auto xs = x.data();
  const std::size_t out_plane = out_h * out_w;
  std::vector<double> out(planes * out_plane);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = xs.data() + p * h * w;
    double* dst = out.data() + p * out_plane;
    for (std::size_t i = 0; i < out_plane; ++i) {
      const Tap4& t = (*taps)[i];
      dst[i] = t.w[0] * src[t.idx[0]] + t.w[1] * src[t.idx[1]] + t.w[2] * src[t.idx[2]] +
               t.w[3] * src[t.idx[3]];
    }
  }
  Shape shape = x.shape();
  shape[shape.size() - 2] = out_h;
  shape[shape.size() - 1] = out_w;
  return make_result("resample_bilinear", std::move(shape), std::move(out), {x},
                     [taps, planes, h, w, out_plane](std::span<const double> g,
                                                     std::span<std::span<double>> gi) {
                       for (std::size_t p = 0; p < planes; ++p) {
                         double* dst = gi[0].data() + p * h * w;
                         const double* gp = g.data() + p * out_plane;
                         for (std::size_t i = 0; i < out_plane; ++i) {
                           const Tap4& t = (*taps)[i];
                           for (int k = 0; k < 4; ++k) dst[t.idx[k]] += t.w[k] * gp[i];
                         }
                       }
                     });
}

Tensor resize_bilinear(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  const double fv = static_cast<double>(out_h) / static_cast<double>(x.dim(-2));
  const double fh = static_cast<double>(out_w) / static_cast<double>(x.dim(-1));
  return resample_bilinear(x, out_h, out_w, fv, fh);
}

namespace {

// Index map over the last two axes: out pixel (y, x) reads src(map_y[y], map_x[x]).
Tensor remap_plane(const Tensor& x, const std::vector<std::size_t>& map_y,
                   const std::vector<std::size_t>& map_x) {
  const std::size_t h = x.dim(-2), w = x.dim(-1);
  const std::size_t planes = x.numel() / (h * w);
  const std::size_t oh = map_y.size(), ow = map_x.size();
  std::vector<std::size_t> index;
  index.reserve(planes * oh * ow);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) index.push_back(p * h * w + map_y[y] * w + map_x[xx]);
  Shape shape = x.shape();
  shape[shape.size() - 2] = oh;
  shape[shape.size() - 1] = ow;
  return ops::gather(x, std::move(shape), std::move(index));
}

}  // namespace

Tensor upsample_nearest2x(const Tensor& x) {
  std::vector<std::size_t> my(2 * x.dim(-2)), mx(2 * x.dim(-1));
  for (std::size_t i = 0; i < my.size(); ++i) my[i] = i / 2;
  for (std::size_t i = 0; i < mx.size(); ++i) mx[i] = i / 2;
  return remap_plane(x, my, mx);
}

Tensor pad_edge(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  const std::size_t h = x.dim(-2), w = x.dim(-1);
  if (out_h < h || out_w < w) throw DimensionError("pad_edge cannot shrink");
  if (out_h == h && out_w == w) return x;
  std::vector<std::size_t> my(out_h), mx(out_w);
  for (std::size_t i = 0; i < out_h; ++i) my[i] = std::min(i, h - 1);
  for (std::size_t i = 0; i < out_w; ++i) mx[i] = std::min(i, w - 1);
  return remap_plane(x, my, mx);
}

Tensor crop(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  const std::size_t h = x.dim(-2), w = x.dim(-1);
  if (out_h > h || out_w > w) throw DimensionError("crop larger than input");
  if (out_h == h && out_w == w) return x;
  std::vector<std::size_t> my(out_h), mx(out_w);
  for (std::size_t i = 0; i < out_h; ++i) my[i] = i;
  for (std::size_t i = 0; i < out_w; ++i) mx[i] = i;
  return remap_plane(x, my, mx);
}

}  // namespace scaleform
