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


#include "scaleform/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "scaleform/errors.hpp"
#include "scaleform/rng.hpp"

namespace scaleform::synth {

namespace {

using Rgb = std::array<double, 3>;

// 1 inside, 0 outside, linear ramp of width `soft` across the boundary of
// the signed distance d (negative inside).
double coverage(double d, double soft) { return std::clamp(0.5 - d / soft, 0.0, 1.0); }

// Approximate signed distance to an axis-aligned ellipse.
double ellipse(double x, double y, double cx, double cy, double rx, double ry) {
  const double nx = (x - cx) / rx, ny = (y - cy) / ry;
  const double k = std::sqrt(nx * nx + ny * ny);
  return (k - 1.0) * std::min(rx, ry);
}

void blend(Rgb& px, const Rgb& c, double a) {
  for (int i = 0; i < 3; ++i) px[i] = px[i] * (1.0 - a) + c[i] * a;
}

Rgb jitter(CounterRng& rng, Rgb base, double amp) {
  for (double& v : base) v = std::clamp(v + rng.uniform(-amp, amp), 0.0, 1.0);
  return base;
}

}  // namespace

Tensor face(std::size_t size, std::uint64_t seed, std::uint64_t index) {
  if (size < 8) throw RangeError("synthetic faces need at least 8x8 pixels");
  CounterRng rng(seed, "synth.face", index);
  const double tone = rng.uniform(0.35, 0.85);
  const Rgb skin = jitter(rng, {tone, tone * 0.78, tone * 0.62}, 0.04);
  const Rgb bg_top = jitter(rng, {0.5, 0.55, 0.6}, 0.3);
  const Rgb bg_bottom = jitter(rng, bg_top, 0.15);
  const double hair_level = rng.uniform(0.05, 0.5);
  const Rgb hair = jitter(rng, {hair_level, hair_level * 0.8, hair_level * 0.6}, 0.05);
  const Rgb iris = jitter(rng, {0.2, 0.25, 0.3}, 0.15);
  const Rgb lips = jitter(rng, {0.7, 0.3, 0.3}, 0.1);

  // Faces are roughly aligned, as in cropped face datasets: geometry moves by
  // a pixel or so while colours vary freely.
  const double cx = 0.5 + rng.uniform(-0.015, 0.015);
  const double cy = 0.54 + rng.uniform(-0.015, 0.015);
  const double rx = rng.uniform(0.28, 0.31), ry = rng.uniform(0.35, 0.38);
  const double hairline = cy - ry * rng.uniform(0.55, 0.68);
  const double eye_dx = rx * rng.uniform(0.42, 0.47);
  const double eye_y = cy - ry * rng.uniform(0.16, 0.21);
  const double eye_r = rx * rng.uniform(0.15, 0.18);
  const double mouth_y = cy + ry * rng.uniform(0.5, 0.56);
  const double mouth_w = rx * rng.uniform(0.38, 0.5);
  const double mouth_h = ry * rng.uniform(0.06, 0.09);
  const double light = rng.uniform(-0.15, 0.15);

  const double px_size = 1.0 / double(size);
  const double soft = 1.5 * px_size;
  std::vector<double> out(3 * size * size);
  const std::size_t plane = size * size;
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const double y = (double(i) + 0.5) * px_size, x = (double(j) + 0.5) * px_size;
      Rgb px;
      for (int c = 0; c < 3; ++c) px[c] = bg_top[c] * (1.0 - y) + bg_bottom[c] * y;

      // Hair: a larger ellipse behind the face.
      blend(px, hair, coverage(ellipse(x, y, cx, cy - ry * 0.12, rx * 1.18, ry * 1.08), soft));

      const double head = coverage(ellipse(x, y, cx, cy, rx, ry), soft);
      const double shade = 1.0 + light * (x - cx) / rx - 0.12 * std::max(0.0, (y - cy) / ry);
      Rgb lit = skin;
      for (double& v : lit) v = std::clamp(v * shade, 0.0, 1.0);
      const double below_hairline = std::clamp((y - hairline) / soft + 0.5, 0.0, 1.0);
      blend(px, lit, head * below_hairline);

      for (double side : {-1.0, 1.0}) {
        const double ex = cx + side * eye_dx;
        blend(px, {0.95, 0.95, 0.93}, head * coverage(ellipse(x, y, ex, eye_y, eye_r * 1.5, eye_r), soft));
        blend(px, iris, head * coverage(ellipse(x, y, ex, eye_y, eye_r * 0.8, eye_r * 0.8), soft));
        blend(px, hair,
              0.8 * head * coverage(ellipse(x, y, ex, eye_y - eye_r * 2.0, eye_r * 1.7, eye_r * 0.35), soft));
      }
      // Nose: a soft darker vertical ellipse.
      blend(px, {lit[0] * 0.8, lit[1] * 0.75, lit[2] * 0.7},
            0.6 * head * coverage(ellipse(x, y, cx, cy + ry * 0.15, rx * 0.1, ry * 0.22), 3.0 * soft));
      blend(px, lips, head * coverage(ellipse(x, y, cx, mouth_y, mouth_w, mouth_h), soft));

      for (int c = 0; c < 3; ++c) out[c * plane + i * size + j] = std::clamp(px[c], 0.0, 1.0);
    }
  }
  return Tensor({3, size, size}, std::move(out));
}

}  // namespace scaleform::synth
