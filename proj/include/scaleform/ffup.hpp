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

#ifndef SCALEFORM_FFUP_HPP_
#define SCALEFORM_FFUP_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scaleform/params.hpp"
#include "scaleform/rng.hpp"
#include "scaleform/tensor.hpp"

// Scale-aware fractional up-sampling.
//
// Every HR output pixel is projected into LR feature space; the projection
// residue together with the scale pair conditions a small MLP that predicts a
// sampling offset and a per-channel modulation for that pixel. Features are
// bilinearly sampled at the offset position and refined by a squeeze/expand
// pair of 1x1 convolutions whose squeezed activations are modulated by the
// predicted weights, added back residually.
namespace scaleform::ffup {

inline constexpr double kDefaultMaxScale = 16.0;

// Horizontal / vertical magnification, both in [1, max_scale].
struct ScalePair {
  double horizontal = 1.0;
  double vertical = 1.0;

  static ScalePair uniform(double s) { return {s, s}; }
  // Throws RangeError outside [1, max_scale].
  void validate(double max_scale = kDefaultMaxScale) const;
  // Clamps into [1, max_scale]; returns true if anything changed.
  bool clamp(double max_scale = kDefaultMaxScale);
};

struct GridPoint {
  double x_prime;
  double y_prime;
  double rx;
  double ry;
};

// LR coordinates and relative distances of every HR output pixel. The mapping
// is separable, so values are stored per column (x) and per row (y).
class SampleGrid {
 public:
  SampleGrid(std::size_t height, std::size_t width, ScalePair scale);

  std::size_t height() const { return y_prime_.size(); }
  std::size_t width() const { return x_prime_.size(); }
  const ScalePair& scale() const { return scale_; }
  GridPoint at(std::size_t y, std::size_t x) const {
    return {x_prime_[x], y_prime_[y], rx_[x], ry_[y]};
  }
  std::span<const double> x_prime() const { return x_prime_; }
  std::span<const double> y_prime() const { return y_prime_; }
  std::span<const double> rx() const { return rx_; }
  std::span<const double> ry() const { return ry_; }

 private:
  ScalePair scale_;
  std::vector<double> x_prime_, rx_, y_prime_, ry_;
};

// x' = (x + 0.5) / s_h - 0.5,  R(x) = x' - floor((x + 0.5) / s_h); same for y.
SampleGrid build_grid(std::size_t h_out, std::size_t w_out, ScalePair scale);

// round(s * extent), ties to even.
std::size_t output_extent(std::size_t extent, double scale);

struct FfupConfig {
  std::size_t channels = 16;
  std::size_t squeeze_ratio = 2;
  std::size_t hidden = 64;     // conditioning MLP width (4 -> hidden -> hidden)
  double offset_clamp = 1.0;   // |offset| < offset_clamp LR pixels
  std::size_t kernel = 2;      // 2 = plain bilinear; k > 2 stacks k*k unit-spaced samples
  double max_scale = kDefaultMaxScale;

  std::size_t squeezed() const { return channels / squeeze_ratio; }
  // Throws ConfigError.
  void validate() const;
};

struct FfupParams {
  Tensor fc1_weight, fc1_bias;        // [4, hidden], [hidden]
  Tensor fc2_weight, fc2_bias;        // [hidden, hidden], [hidden]
  Tensor offset_weight, offset_bias;  // [hidden, 2], [2]
  Tensor scale_weight, scale_bias;    // [hidden, C_mid], [C_mid]
  Tensor squeeze_weight, squeeze_bias;  // [C_mid, C, 1, 1], [C_mid]
  Tensor expand_weight, expand_bias;    // [C, C_mid, 1, 1], [C]
  Tensor stack_weight, stack_bias;      // kernel > 2 only: [C, C*k*k, 1, 1], [C]

  static FfupParams init(const FfupConfig& config, CounterRng& rng);

  // Identity-configuration helpers.
  void zero_offset_head();
  void zero_expand();

  void collect(NamedTensors& out, const std::string& prefix = "ffup") const;
};

struct Conditioning {
  Tensor offsets;        // [h_out, w_out, 2] as (dx, dy)
  Tensor scale_weights;  // [h_out, w_out, C_mid]
};

// Evaluates MLP(s_h || s_v || R(x) || R(y)) independently for every pixel.
Conditioning condition(const ScalePair& scale, const SampleGrid& grid, const FfupParams& params,
                       const FfupConfig& config);

// Bilinear sampling of f [N,C,H,W] at (x' + dx + shift_x, y' + dy + shift_y)
// with clamp-to-edge. Differentiable in both the features and the offsets
// ([h_out, w_out, 2], may be undefined for zero offsets).
Tensor grid_sample(const Tensor& features, const SampleGrid& grid, const Tensor& offsets,
                   double shift_x = 0.0, double shift_y = 0.0);

// F_up = Conv_ex(W_scale * Conv_sq(F_sv)) + F_sv, F_sv = grid-sampled features.
Tensor upsample(const Tensor& features, const ScalePair& scale, const FfupParams& params,
                const FfupConfig& config, Conditioning* conditioning_out = nullptr);

}  // namespace scaleform::ffup

#endif  // SCALEFORM_FFUP_HPP_
