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


#include "scaleform/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "scaleform/errors.hpp"
#include "scaleform/rng.hpp"
#include "scaleform/sampling.hpp"

namespace scaleform::degrade {

namespace {

constexpr std::size_t kMinLq = 8;

void check_image(const Tensor& img, const char* op) {
  if (img.ndim() != 3 || img.dim(0) != 3) {
    throw DimensionError(std::string(op) + " expects [3,H,W], got " + shape_str(img.shape()));
  }
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

std::size_t reflect(long p, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * long(n - 1);
  long m = p % period;
  if (m < 0) m += period;
  return std::size_t(m < long(n) ? m : period - m);
}

void check_range(const Range& r, double lo, double hi, const char* name) {
  if (!(r.lo >= lo && r.hi <= hi && r.lo <= r.hi)) {
    throw RangeError(std::string(name) + " range [" + std::to_string(r.lo) + ", " +
                     std::to_string(r.hi) + "] invalid");
  }
}

void check_amplitudes(const JitterAmplitudes& a) {
  for (double v : {a.brightness, a.contrast, a.saturation}) {
    if (!(v >= 0.0 && v <= 0.5)) throw RangeError("jitter amplitude outside [0, 0.5]");
  }
}

// Annex K tables.
constexpr std::array<int, 64> kLuma = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
constexpr std::array<int, 64> kChroma = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

// BT.601 full range, 0-255 scale, before the +128 chroma offset.
constexpr double kToYcc[3][3] = {{0.299, 0.587, 0.114},
                                 {-0.168736, -0.331264, 0.5},
                                 {0.5, -0.418688, -0.081312}};

struct ColorMatrices {
  double inverse[3][3];
};

const ColorMatrices& color_matrices() {
  static const ColorMatrices m = [] {
    ColorMatrices out{};
    const auto& a = kToYcc;
    const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                       a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                       a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
        out.inverse[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / det;
      }
    return out;
  }();
  return m;
}

const std::array<double, 64>& dct_basis() {
  static const std::array<double, 64> basis = [] {
    std::array<double, 64> b{};
    const double pi = std::acos(-1.0);
    for (int u = 0; u < 8; ++u)
      for (int x = 0; x < 8; ++x) {
        const double alpha = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
        b[u * 8 + x] = alpha * std::cos((2 * x + 1) * u * pi / 16.0);
      }
    return b;
  }();
  return basis;
}

// out = B * in * B^T (forward) or B^T * in * B (inverse) for one 8x8 block.
void dct8x8(const double* in, double* out, bool inverse) {
  const auto& b = dct_basis();
  double tmp[64];
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      double s = 0.0;
      for (int k = 0; k < 8; ++k) s += (inverse ? b[k * 8 + i] : b[i * 8 + k]) * in[k * 8 + j];
      tmp[i * 8 + j] = s;
    }
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      double s = 0.0;
      for (int k = 0; k < 8; ++k) s += tmp[i * 8 + k] * (inverse ? b[k * 8 + j] : b[j * 8 + k]);
      out[i * 8 + j] = s;
    }
}

Tensor jpeg_chain(const Tensor& img, int q, bool quantize) {
  check_image(img, "jpeg_sim");
  const std::size_t h = img.dim(1), w = img.dim(2);
  const std::size_t ph = (h + 7) / 8 * 8, pw = (w + 7) / 8 * 8;
  const auto src = img.data();
  const auto& inv = color_matrices().inverse;

  // Edge-replicated, level-shifted YCbCr planes on the 0-255 scale.
  std::vector<double> ycc(3 * ph * pw);
  for (std::size_t y = 0; y < ph; ++y)
    for (std::size_t x = 0; x < pw; ++x) {
      const std::size_t sy = std::min(y, h - 1), sx = std::min(x, w - 1);
      double rgb[3];
      for (int c = 0; c < 3; ++c) rgb[c] = 255.0 * src[(c * h + sy) * w + sx];
      for (int c = 0; c < 3; ++c) {
        const double v = kToYcc[c][0] * rgb[0] + kToYcc[c][1] * rgb[1] + kToYcc[c][2] * rgb[2];
        // Level shift: Y - 128, chroma (+128) - 128.
        ycc[(c * ph + y) * pw + x] = c == 0 ? v - 128.0 : v;
      }
    }

  std::array<double, 64> tables[2];
  if (quantize) tables[0] = quant_table(q, false), tables[1] = quant_table(q, true);
  double block[64], coef[64];
  for (int c = 0; c < 3; ++c)
    for (std::size_t by = 0; by < ph; by += 8)
      for (std::size_t bx = 0; bx < pw; bx += 8) {
        double* plane = ycc.data() + c * ph * pw;
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j) block[i * 8 + j] = plane[(by + i) * pw + bx + j];
        dct8x8(block, coef, false);
        if (quantize) {
          const auto& t = tables[c == 0 ? 0 : 1];
          for (int k = 0; k < 64; ++k) coef[k] = std::round(coef[k] / t[k]) * t[k];
        }
        dct8x8(coef, block, true);
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j) plane[(by + i) * pw + bx + j] = block[i * 8 + j];
      }

  std::vector<double> out(3 * h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double yy = ycc[y * pw + x] + 128.0;
      const double cb = ycc[(ph + y) * pw + x], cr = ycc[(2 * ph + y) * pw + x];
      for (int c = 0; c < 3; ++c) {
        const double v = inv[c][0] * yy + inv[c][1] * cb + inv[c][2] * cr;
        out[(c * h + y) * w + x] = quantize ? clamp01(v / 255.0) : v / 255.0;
      }
    }
  return Tensor(img.shape(), std::move(out));
}

}  // namespace

void DegradationSpec::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw RangeError("sigma must be >= 0");
  if (!(r >= 1.0) || !std::isfinite(r)) throw RangeError("downsample factor must be >= 1");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw RangeError("noise level must be >= 0");
  if (q < 1 || q > 100) throw RangeError("JPEG quality " + std::to_string(q) + " outside [1, 100]");
  check_amplitudes(jitter);
}

DegradationRanges DegradationRanges::desk() {
  DegradationRanges r;
  r.sigma = {0.2, 1.5};
  r.r = {1.0, 4.0};
  r.jitter = {0.05, 0.05, 0.05};
  return r;
}

void DegradationRanges::validate() const {
  check_range(sigma, 0.0, 1e9, "sigma");
  check_range(r, 1.0, 1e9, "r");
  check_range(delta, 0.0, 1e9, "delta");
  check_range(q, 1.0, 100.0, "q");
  check_amplitudes(jitter);
}

DegradationSpec sample_spec(const DegradationRanges& ranges, std::uint64_t seed,
                            std::uint64_t index) {
  ranges.validate();
  CounterRng rng(seed, "degrade.spec", index);
  DegradationSpec s;
  s.sigma = rng.uniform(ranges.sigma.lo, ranges.sigma.hi);
  s.r = rng.uniform(ranges.r.lo, ranges.r.hi);
  s.delta = rng.uniform(ranges.delta.lo, ranges.delta.hi);
  const int qlo = int(std::ceil(ranges.q.lo)), qhi = int(std::floor(ranges.q.hi));
  s.q = qlo + int(std::floor(rng.uniform() * (qhi - qlo + 1)));
  s.q = std::min(s.q, qhi);
  s.jitter = ranges.jitter;
  s.seed = rng.next_u64();
  return s;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0)) throw RangeError("sigma must be >= 0");
  if (sigma < 0.05) return {1.0};
  const long radius = long(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-double(i * i) / (2.0 * sigma * sigma));
    total += k[i + radius];
  }
  for (double& v : k) v /= total;
  return k;
}

Tensor gaussian_blur(const Tensor& img, double sigma) {
  check_image(img, "gaussian_blur");
  const std::vector<double> k = gaussian_kernel(sigma);
  if (k.size() == 1) return img.detach().clone();
  const long radius = long(k.size() / 2);
  const std::size_t h = img.dim(1), w = img.dim(2);
  const auto src = img.data();
  std::vector<double> tmp(src.size()), out(src.size());
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double s = 0.0;
        for (long i = -radius; i <= radius; ++i)
          s += k[i + radius] * src[(c * h + y) * w + reflect(long(x) + i, w)];
        tmp[(c * h + y) * w + x] = s;
      }
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double s = 0.0;
        for (long i = -radius; i <= radius; ++i)
          s += k[i + radius] * tmp[(c * h + reflect(long(y) + i, h)) * w + x];
        out[(c * h + y) * w + x] = s;
      }
  return Tensor(img.shape(), std::move(out));
}

Tensor downsample(const Tensor& img, double r) {
  check_image(img, "downsample");
  if (!(r >= 1.0) || !std::isfinite(r)) throw RangeError("downsample factor must be >= 1");
  const std::size_t h = img.dim(1), w = img.dim(2);
  const std::size_t oh = std::size_t(std::nearbyint(double(h) / r));
  const std::size_t ow = std::size_t(std::nearbyint(double(w) / r));
  if (oh < kMinLq || ow < kMinLq) {
    throw RangeError("downsampling " + std::to_string(h) + "x" + std::to_string(w) + " by " +
                     std::to_string(r) + " gives " + std::to_string(oh) + "x" +
                     std::to_string(ow) + ", below 8x8");
  }
  NoGradGuard guard;
  const Tensor batched = Tensor({1, 3, h, w}, std::vector<double>(img.data().begin(), img.data().end()));
  const Tensor out = resample_bilinear(batched, oh, ow, 1.0 / r, 1.0 / r);
  return Tensor({3, oh, ow}, std::vector<double>(out.data().begin(), out.data().end()));
}

Tensor awgn(const Tensor& img, double delta, std::uint64_t seed) {
  check_image(img, "awgn");
  if (!(delta >= 0.0)) throw RangeError("noise level must be >= 0");
  if (delta == 0.0) return img.detach().clone();
  CounterRng rng(seed, "degrade.awgn");
  const double std_dev = delta / 255.0;
  std::vector<double> out(img.data().begin(), img.data().end());
  for (double& v : out) v = clamp01(v + std_dev * rng.normal());
  return Tensor(img.shape(), std::move(out));
}

std::array<double, 64> quant_table(int q, bool chroma) {
  if (q < 1 || q > 100) throw RangeError("JPEG quality " + std::to_string(q) + " outside [1, 100]");
  const long scale = q < 50 ? 5000 / q : 200 - 2 * q;
  const auto& base = chroma ? kChroma : kLuma;
  std::array<double, 64> t{};
  for (int i = 0; i < 64; ++i) t[i] = double(std::max(1L, (base[i] * scale + 50) / 100));
  return t;
}

Tensor jpeg_sim(const Tensor& img, int q) {
  if (q < 1 || q > 100) throw RangeError("JPEG quality " + std::to_string(q) + " outside [1, 100]");
  return jpeg_chain(img, q, true);
}

Tensor jpeg_roundtrip_unquantized(const Tensor& img) { return jpeg_chain(img, 100, false); }

JitterDraws draw_jitter(const JitterAmplitudes& a, std::uint64_t seed) {
  check_amplitudes(a);
  CounterRng rng(seed, "degrade.jitter");
  JitterDraws d;
  d.brightness = rng.uniform(-a.brightness, a.brightness);
  d.contrast = 1.0 + rng.uniform(-a.contrast, a.contrast);
  d.saturation = 1.0 + rng.uniform(-a.saturation, a.saturation);
  return d;
}

Tensor apply_jitter(const Tensor& img, const JitterDraws& d) {
  check_image(img, "color_jitter");
  const std::size_t plane = img.dim(1) * img.dim(2);
  std::vector<double> x(img.data().begin(), img.data().end());
  auto luma = [&](std::size_t i) {
    return 0.299 * x[i] + 0.587 * x[plane + i] + 0.114 * x[2 * plane + i];
  };
  if (d.brightness != 0.0) {
    for (double& v : x) v = clamp01(v + d.brightness);
  }
  if (d.contrast != 1.0) {
    double mean = 0.0;
    for (std::size_t i = 0; i < plane; ++i) mean += luma(i);
    mean /= double(plane);
    for (double& v : x) v = clamp01(mean + d.contrast * (v - mean));
  }
  if (d.saturation != 1.0) {
    for (std::size_t i = 0; i < plane; ++i) {
      const double g = luma(i);
      for (int c = 0; c < 3; ++c) {
        double& v = x[c * plane + i];
        v = clamp01(g + d.saturation * (v - g));
      }
    }
  }
  return Tensor(img.shape(), std::move(x));
}

Tensor color_jitter(const Tensor& img, const JitterAmplitudes& a, std::uint64_t seed) {
  return apply_jitter(img, draw_jitter(a, seed));
}

Degraded degrade(const Tensor& img, const DegradationSpec& spec, const DegradeOptions& options) {
  check_image(img, "degrade");
  spec.validate();
  Degraded d;
  d.spec = spec;
  Tensor x = gaussian_blur(img, spec.sigma);
  x = downsample(x, spec.r);
  x = awgn(x, spec.delta, spec.seed);
  x = jpeg_sim(x, spec.q);
  if (options.jitter && spec.jitter.any()) {
    d.jitter = draw_jitter(spec.jitter, spec.seed);
    x = apply_jitter(x, d.jitter);
  }
  if (options.resize_back) {
    NoGradGuard guard;
    const Tensor up = resize_bilinear(Tensor({1, 3, x.dim(1), x.dim(2)},
                                             std::vector<double>(x.data().begin(), x.data().end())),
                                      img.dim(1), img.dim(2));
    x = Tensor(img.shape(), std::vector<double>(up.data().begin(), up.data().end()));
  }
  d.lq = x;
  return d;
}

std::string manifest_fields(const Degraded& d) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.17g\t%.17g\t%.17g\t%d\t%.17g\t%.17g\t%.17g\t%llu",
                d.spec.sigma, d.spec.r, d.spec.delta, d.spec.q, d.jitter.brightness,
                d.jitter.contrast, d.jitter.saturation, static_cast<unsigned long long>(d.spec.seed));
  return buf;
}

}  // namespace scaleform::degrade
