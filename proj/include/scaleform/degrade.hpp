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


#ifndef SCALEFORM_DEGRADE_HPP_
#define SCALEFORM_DEGRADE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "scaleform/tensor.hpp"

// Synthetic low-quality image generation. Images are [3, H, W] in [0, 1].
namespace scaleform::degrade {

struct Range {
  double lo = 0.0, hi = 0.0;
};

struct JitterAmplitudes {
  double brightness = 0.0, contrast = 0.0, saturation = 0.0;
  bool any() const { return brightness > 0.0 || contrast > 0.0 || saturation > 0.0; }
};

struct JitterDraws {
  double brightness = 0.0;  // added
  double contrast = 1.0;    // factor about the mean
  double saturation = 1.0;  // factor about luma
};

struct DegradationSpec {
  double sigma = 0.0;
  double r = 1.0;
  double delta = 0.0;
  int q = 100;
  JitterAmplitudes jitter;
  std::uint64_t seed = 0;

  void validate() const;  // RangeError
};

struct DegradationRanges {
  Range sigma{0.2, 10.0};
  Range r{1.0, 8.0};
  Range delta{0.0, 15.0};
  Range q{60.0, 100.0};
  JitterAmplitudes jitter;

  // Full-strength ranges, the CLI default.
  static DegradationRanges full() { return {}; }
  // Narrower blur/scale ranges that keep 32x32 crops at least 8x8 after
  // downsampling.
  static DegradationRanges desk();
  void validate() const;
};

// Draws one spec for corpus entry `index`; q is uniform over the integers in
// [q.lo, q.hi].
DegradationSpec sample_spec(const DegradationRanges& ranges, std::uint64_t seed,
                            std::uint64_t index);

Tensor gaussian_blur(const Tensor& img, double sigma);
// Normalized 1-D kernel of radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);
Tensor downsample(const Tensor& img, double r);
Tensor awgn(const Tensor& img, double delta, std::uint64_t seed);

// IJG-scaled quantization table (row-major 8x8) for quality q.
std::array<double, 64> quant_table(int q, bool chroma);
Tensor jpeg_sim(const Tensor& img, int q);
// The jpeg_sim transform chain with quantization skipped.
Tensor jpeg_roundtrip_unquantized(const Tensor& img);

JitterDraws draw_jitter(const JitterAmplitudes& amplitudes, std::uint64_t seed);
Tensor apply_jitter(const Tensor& img, const JitterDraws& draws);
Tensor color_jitter(const Tensor& img, const JitterAmplitudes& amplitudes, std::uint64_t seed);

struct DegradeOptions {
  bool jitter = true;       // train-time colour jitter stage
  bool resize_back = false; // bilinear resize LQ back to the input size
};

struct Degraded {
  Tensor lq;
  DegradationSpec spec;
  JitterDraws jitter;
};

// blur -> downsample -> noise -> jpeg -> jitter.
Degraded degrade(const Tensor& img, const DegradationSpec& spec, const DegradeOptions& options = {});

// "sigma r delta q brightness contrast saturation seed", tab-separated.
std::string manifest_fields(const Degraded& d);

}  // namespace scaleform::degrade

#endif  // SCALEFORM_DEGRADE_HPP_
