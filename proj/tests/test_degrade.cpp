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


#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "scaleform/degrade.hpp"
#include "scaleform/errors.hpp"
#include "test_util.hpp"

using namespace scaleform;
using namespace scaleform::degrade;
using scaleform::testing::bit_equal;
using scaleform::testing::random_tensor;

namespace {

double psnr(const Tensor& a, const Tensor& b) {
  double se = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    se += d * d;
  }
  return 10.0 * std::log10(1.0 / (se / double(a.numel())));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

Tensor image(std::size_t h, std::size_t w, auto&& f) {
  std::vector<double> v(3 * h * w);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) v[(c * h + y) * w + x] = f(c, y, x);
  return Tensor({3, h, w}, v);
}

Tensor gradient_image(std::size_t h, std::size_t w) {
  return image(h, w, [&](std::size_t c, std::size_t y, std::size_t x) {
    return 0.1 + 0.8 * (double(x) / double(w - 1) * (c == 0 ? 1.0 : 0.5) +
                        double(y) / double(h - 1) * (c == 2 ? 0.5 : 0.0)) /
                     (c == 0 ? 1.0 : 1.0);
  });
}

// Smooth shading with mid-frequency texture, loosely like a photograph.
Tensor textured_image(std::size_t h, std::size_t w) {
  return image(h, w, [&](std::size_t c, std::size_t y, std::size_t x) {
    const double u = double(x) / double(w), v = double(y) / double(h);
    return 0.5 + 0.25 * std::sin(6.0 * u + 2.0 * double(c)) * std::cos(5.0 * v) +
           0.1 * std::sin(40.0 * u * v + double(c));
  });
}

bool in_unit_range(const Tensor& t) {
  return std::ranges::all_of(t.data(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

}  // namespace

TEST_CASE("blur with sigma 0 is the identity and keeps constants") {
  const Tensor img = random_tensor({3, 9, 11}, 1, 0, 1);
  CHECK(bit_equal(gaussian_blur(img, 0.0), img));
  CHECK(bit_equal(gaussian_blur(img, 0.04), img));
  const Tensor flat = Tensor::full({3, 12, 10}, 0.3);
  for (double s : {0.5, 1.0, 3.0, 10.0}) CHECK(max_abs_diff(gaussian_blur(flat, s), flat) <= 1e-15);
}

TEST_CASE("blur of an impulse gives the discretized Gaussian") {
  std::vector<double> row(3 * 15, 0.0);
  row[7] = 1.0;
  const Tensor impulse({3, 1, 15}, row);
  const Tensor out = gaussian_blur(impulse, 1.0);
  double norm = 1.0;
  for (int k = 1; k <= 3; ++k) norm += 2.0 * std::exp(-0.5 * k * k);
  for (int k = -3; k <= 3; ++k)
    CHECK(out.at({0, 0, std::size_t(7 + k)}) ==
          doctest::Approx(std::exp(-0.5 * k * k) / norm).epsilon(1e-14));
  CHECK(out.at({0, 0, 3}) == 0.0);
  CHECK(gaussian_kernel(1.0).size() == 7);
  CHECK(gaussian_kernel(1.01).size() == 9);
}

TEST_CASE("blur reflects at the border") {
  std::vector<double> row(3 * 6, 0.0);
  row[1] = 1.0;
  const Tensor out = gaussian_blur(Tensor({3, 1, 6}, row), 0.5);
  // Pixel 0 sees pixel 1 at offset +1 and, mirrored, at offset -1.
  const auto k = gaussian_kernel(0.5);
  CHECK(out.at({0, 0, 0}) == doctest::Approx(2 * k[1]).epsilon(1e-14));
  CHECK(out.at({0, 0, 1}) == doctest::Approx(k[2] + k[0]).epsilon(1e-14));  // -2 mirrors onto 1
  CHECK(out.at({0, 0, 3}) == doctest::Approx(k[0]).epsilon(1e-14));
}

TEST_CASE("downsample identity, constants and the checkerboard") {
  const Tensor img = random_tensor({3, 16, 12}, 2, 0, 1);
  CHECK(bit_equal(downsample(img, 1.0), img));
  const Tensor flat = Tensor::full({3, 20, 20}, 0.7);
  for (double r : {1.3, 2.0, 2.5}) {
    const Tensor small = downsample(flat, r);
    for (double v : small.data()) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
  }
  const Tensor board = image(16, 16, [](std::size_t, std::size_t y, std::size_t x) {
    return double((x + y) % 2);
  });
  const Tensor half = downsample(board, 2.0);
  CHECK(half.shape() == Shape{3, 8, 8});
  for (double v : half.data()) CHECK(v == 0.5);
}

TEST_CASE("downsample matches a brute-force bilinear resize") {
  const Tensor img = random_tensor({3, 23, 19}, 3, 0, 1);
  const double r = 2.3;
  const Tensor out = downsample(img, r);
  const std::size_t oh = std::size_t(std::lround(23 / r)), ow = std::size_t(std::lround(19 / r));
  REQUIRE(out.shape() == Shape{3, oh, ow});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        const double sy = std::clamp((y + 0.5) * r - 0.5, 0.0, 22.0);
        const double sx = std::clamp((x + 0.5) * r - 0.5, 0.0, 18.0);
        const std::size_t y0 = std::size_t(sy), x0 = std::size_t(sx);
        const std::size_t y1 = std::min<std::size_t>(y0 + 1, 22), x1 = std::min<std::size_t>(x0 + 1, 18);
        const double fy = sy - y0, fx = sx - x0;
        const double expect = (1 - fy) * ((1 - fx) * img.at({c, y0, x0}) + fx * img.at({c, y0, x1})) +
                              fy * ((1 - fx) * img.at({c, y1, x0}) + fx * img.at({c, y1, x1}));
        CHECK(out.at({c, y, x}) == doctest::Approx(expect).epsilon(1e-14));
      }
}

TEST_CASE("downsample refuses outputs below 8x8") {
  const Tensor img = random_tensor({3, 32, 32}, 4, 0, 1);
  CHECK(downsample(img, 4.0).shape() == Shape{3, 8, 8});
  CHECK_THROWS_AS(downsample(img, 4.5), RangeError);
  CHECK_THROWS_AS(downsample(img, 0.5), RangeError);
}

TEST_CASE("noise level and determinism") {
  const Tensor img = random_tensor({3, 10, 10}, 5, 0, 1);
  CHECK(bit_equal(awgn(img, 0.0, 1), img));
  CHECK(bit_equal(awgn(img, 7.0, 42), awgn(img, 7.0, 42)));
  CHECK_FALSE(bit_equal(awgn(img, 7.0, 42), awgn(img, 7.0, 43)));

  const Tensor gray = Tensor::full({3, 578, 577}, 0.5);  // just over 10^6 values
  const double delta = 15.0;
  const Tensor noisy = awgn(gray, delta, 7);
  double s = 0.0, ss = 0.0;
  for (double v : noisy.data()) s += v - 0.5, ss += (v - 0.5) * (v - 0.5);
  const double n = double(noisy.numel());
  const double std_dev = std::sqrt(ss / n - (s / n) * (s / n));
  CHECK(std::fabs(std_dev / (delta / 255.0) - 1.0) < 0.02);
  CHECK(in_unit_range(awgn(random_tensor({3, 30, 30}, 6, 0, 1), 15.0, 8)));
}

TEST_CASE("quality scaling of quantization tables") {
  for (double v : quant_table(100, false)) CHECK(v == 1.0);
  for (double v : quant_table(100, true)) CHECK(v == 1.0);
  CHECK(quant_table(50, false)[0] == 16.0);
  CHECK(quant_table(50, true)[63] == 99.0);
  CHECK(quant_table(75, false)[0] == 8.0);   // (16*50+50)/100
  CHECK(quant_table(10, false)[0] == 80.0);  // (16*500+50)/100
  CHECK(quant_table(1, false)[63] == 4950.0);
  CHECK(quant_table(99, false)[1] == 1.0);   // (11*2+50)/100 = 0 -> 1
  CHECK_THROWS_AS(quant_table(0, false), RangeError);
  CHECK_THROWS_AS(jpeg_sim(Tensor::full({3, 8, 8}, 0.5), 101), RangeError);
}

TEST_CASE("transform chain without quantization is lossless") {
  for (int seed = 0; seed < 5; ++seed) {
    const Tensor img = random_tensor({3, 13, 21}, 10 + seed, 0, 1);
    CHECK(max_abs_diff(jpeg_roundtrip_unquantized(img), img) <= 1e-10);
  }
}

TEST_CASE("jpeg at q=100 on a smooth gradient") {
  const Tensor g = gradient_image(37, 45);
  const Tensor out = jpeg_sim(g, 100);
  CHECK(out.shape() == g.shape());
  CHECK(psnr(out, g) > 45.0);
}

TEST_CASE("constant gray blocks survive up to DC rounding") {
  for (int q = 50; q <= 100; ++q)
    for (double v : {0.0, 0.2, 0.5137, 0.9, 1.0}) {
      const Tensor flat = Tensor::full({3, 12, 16}, v);
      // At q=50 the DC step makes the bound tight, hence the rounding slack.
      CHECK(max_abs_diff(jpeg_sim(flat, q), flat) <= 1.0 / 255.0 + 1e-12);
    }
}

TEST_CASE("constant colour blocks survive at high quality") {
  const Tensor flat = image(8, 8, [](std::size_t c, std::size_t, std::size_t) {
    return std::array{0.8, 0.35, 0.2}[c];
  });
  for (int q = 90; q <= 100; ++q) CHECK(max_abs_diff(jpeg_sim(flat, q), flat) <= 1.0 / 255.0);
}

TEST_CASE("jpeg error does not grow with quality") {
  const Tensor img = textured_image(48, 40);
  const double e60 = 1.0 / std::pow(10.0, psnr(jpeg_sim(img, 60), img) / 10.0);
  const double e80 = 1.0 / std::pow(10.0, psnr(jpeg_sim(img, 80), img) / 10.0);
  const double e100 = 1.0 / std::pow(10.0, psnr(jpeg_sim(img, 100), img) / 10.0);
  CHECK(e80 <= e60);
  CHECK(e100 <= e80);
  CHECK(in_unit_range(jpeg_sim(random_tensor({3, 16, 16}, 11, 0, 1), 60)));
}

TEST_CASE("colour jitter") {
  const Tensor img = random_tensor({3, 6, 7}, 12, 0, 1);
  CHECK(bit_equal(color_jitter(img, {}, 3), img));
  const Tensor flat = Tensor::full({3, 4, 4}, 0.6);
  const Tensor brighter = apply_jitter(flat, {0.1, 1.0, 1.0});
  for (double v : brighter.data()) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
  const Tensor saturated = apply_jitter(flat, {0.5, 1.0, 1.0});
  for (double v : saturated.data()) CHECK(v == 1.0);
  const JitterAmplitudes amp{0.2, 0.3, 0.4};
  CHECK(bit_equal(color_jitter(img, amp, 9), color_jitter(img, amp, 9)));
  const JitterDraws d = draw_jitter(amp, 9);
  CHECK(std::fabs(d.brightness) <= 0.2);
  CHECK(std::fabs(d.contrast - 1.0) <= 0.3);
  CHECK(std::fabs(d.saturation - 1.0) <= 0.4);
  CHECK(in_unit_range(color_jitter(img, {0.5, 0.5, 0.5}, 10)));
  CHECK_THROWS_AS(color_jitter(img, {0.6, 0, 0}, 1), RangeError);
  // Saturation 0 collapses every pixel to its luma.
  const Tensor grey = apply_jitter(img, {0.0, 1.0, 0.0});
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 7; ++x) {
      const double l = 0.299 * img.at({0, y, x}) + 0.587 * img.at({1, y, x}) + 0.114 * img.at({2, y, x});
      for (std::size_t c = 0; c < 3; ++c) CHECK(grey.at({c, y, x}) == doctest::Approx(l).epsilon(1e-14));
    }
}

TEST_CASE("identity specification keeps the image") {
  const Tensor img = textured_image(32, 32);
  DegradationSpec spec;
  const Degraded d = degrade::degrade(img, spec);
  CHECK(d.lq.shape() == img.shape());
  CHECK(psnr(d.lq, img) > 45.0);
}

TEST_CASE("degrade sizing, determinism and range") {
  const Tensor img = textured_image(32, 30);
  DegradationSpec spec{1.2, 2.0, 10.0, 70, {0.1, 0.1, 0.1}, 77};
  const Degraded a = degrade::degrade(img, spec), b = degrade::degrade(img, spec);
  CHECK(a.lq.shape() == Shape{3, 16, 15});
  CHECK(bit_equal(a.lq, b.lq));
  CHECK(in_unit_range(a.lq));
  CHECK(a.jitter.contrast != 1.0);
  CHECK(degrade::degrade(img, spec, {.jitter = true, .resize_back = true}).lq.shape() == img.shape());
  spec.q = 0;
  CHECK_THROWS_AS(degrade::degrade(img, spec), RangeError);
}

TEST_CASE("sampled specifications respect their ranges") {
  for (const DegradationRanges& ranges : {DegradationRanges::full(), DegradationRanges::desk()}) {
    std::set<int> qualities;
    for (std::uint64_t i = 0; i < 10000; ++i) {
      const DegradationSpec s = sample_spec(ranges, 5, i);
      CHECK(s.sigma >= ranges.sigma.lo);
      CHECK(s.sigma <= ranges.sigma.hi);
      CHECK(s.r >= ranges.r.lo);
      CHECK(s.r <= ranges.r.hi);
      CHECK(s.delta >= ranges.delta.lo);
      CHECK(s.delta <= ranges.delta.hi);
      CHECK(s.q >= 60);
      CHECK(s.q <= 100);
      qualities.insert(s.q);
    }
    CHECK(qualities.size() == 41);
  }
  const DegradationSpec a = sample_spec(DegradationRanges::full(), 5, 3);
  const DegradationSpec b = sample_spec(DegradationRanges::full(), 5, 3);
  CHECK(a.sigma == b.sigma);
  CHECK(a.seed == b.seed);
  CHECK(sample_spec(DegradationRanges::full(), 5, 4).seed != a.seed);
}

TEST_CASE("degraded corpus is reproducible") {
  const Tensor img = textured_image(32, 32);
  const DegradationRanges ranges = DegradationRanges::desk();
  for (std::uint64_t i = 0; i < 5; ++i) {
    const Degraded a = degrade::degrade(img, sample_spec(ranges, 11, i));
    const Degraded b = degrade::degrade(img, sample_spec(ranges, 11, i));
    CHECK(bit_equal(a.lq, b.lq));
    CHECK(manifest_fields(a) == manifest_fields(b));
  }
}
