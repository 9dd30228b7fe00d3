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


#include "scaleform/objective.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "scaleform/errors.hpp"
#include "scaleform/ops.hpp"
#include "scaleform/sampling.hpp"

namespace scaleform::objective {

namespace {

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;

void same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + " shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

double plugin_term(const LossPlugin& plugin, const Tensor& y_hat, const Tensor& y, double weight,
                   Tensor& acc) {
  if (!plugin) return 0.0;
  const Tensor term = plugin(y_hat, y);
  if (term.numel() != 1) throw DimensionError("loss plugin must return a scalar");
  acc = ops::add(acc, ops::scale(term, weight));
  return term.item();
}

// Gray planes [images][H*W].
std::vector<std::vector<double>> luma_planes(const Tensor& t, std::size_t& h, std::size_t& w) {
  std::size_t n = 1, c = 1;
  switch (t.ndim()) {
    case 2: h = t.dim(0), w = t.dim(1); break;
    case 3: c = t.dim(0), h = t.dim(1), w = t.dim(2); break;
    case 4: n = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3); break;
    default: throw DimensionError("ssim expects an image, got " + shape_str(t.shape()));
  }
  if (c != 1 && c != 3) throw DimensionError("ssim expects 1 or 3 channels");
  const auto d = t.data();
  const std::size_t plane = h * w;
  std::vector<std::vector<double>> out(n, std::vector<double>(plane));
  for (std::size_t i = 0; i < n; ++i) {
    const double* base = d.data() + i * c * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      out[i][p] = c == 1 ? base[p]
                         : 0.299 * base[p] + 0.587 * base[plane + p] + 0.114 * base[2 * plane + p];
    }
  }
  return out;
}

double ssim_plane(const std::vector<double>& x, const std::vector<double>& y, std::size_t h,
                  std::size_t w) {
  static const std::vector<double> g = [] {
    std::vector<double> k(kWindow);
    double total = 0.0;
    for (std::size_t i = 0; i < kWindow; ++i) {
      const double d = double(i) - double(kWindow / 2);
      k[i] = std::exp(-d * d / (2 * kSigma * kSigma));
      total += k[i];
    }
    for (double& v : k) v /= total;
    return k;
  }();
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const std::size_t oh = h - kWindow + 1, ow = w - kWindow + 1;

  // Separable filtering of x, y, x^2, y^2, xy: rows first, then columns.
  std::vector<double> rows(5 * h * ow);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t cx = 0; cx < ow; ++cx) {
      double s[5] = {0, 0, 0, 0, 0};
      for (std::size_t k = 0; k < kWindow; ++k) {
        const double a = x[r * w + cx + k], b = y[r * w + cx + k];
        s[0] += g[k] * a, s[1] += g[k] * b;
        s[2] += g[k] * (a * a), s[3] += g[k] * (b * b), s[4] += g[k] * (a * b);
      }
      for (int m = 0; m < 5; ++m) rows[(m * h + r) * ow + cx] = s[m];
    }
  double total = 0.0;
  for (std::size_t r = 0; r < oh; ++r)
    for (std::size_t cx = 0; cx < ow; ++cx) {
      double s[5] = {0, 0, 0, 0, 0};
      for (std::size_t k = 0; k < kWindow; ++k)
        for (int m = 0; m < 5; ++m) s[m] += g[k] * rows[(m * h + r + k) * ow + cx];
      const double vx = s[2] - s[0] * s[0], vy = s[3] - s[1] * s[1], cov = s[4] - s[0] * s[1];
      total += ((2 * s[0] * s[1] + c1) * (2 * cov + c2)) /
               ((s[0] * s[0] + s[1] * s[1] + c1) * (vx + vy + c2));
    }
  return total / double(oh * ow);
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {lambda1, lambda2, rec, adv, comp, id}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("loss weights must be >= 0");
  }
}

Tensor l1(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "l1");
  return ops::mean(ops::abs(ops::sub(a, b)));
}

LossReport total_loss(const Tensor& y_up, const Tensor& y_hat, const Tensor& y,
                      const LossWeights& weights, const LossPlugins& plugins) {
  weights.validate();
  same_shape(y_hat, y, "total_loss");
  if (y_up.ndim() != 4 || y_up.dim(0) != y.dim(0) || y_up.dim(1) != y.dim(1)) {
    throw DimensionError("y_up " + shape_str(y_up.shape()) + " incompatible with " +
                         shape_str(y.shape()));
  }
  Tensor target = y;
  if (y_up.dim(2) != y.dim(2) || y_up.dim(3) != y.dim(3)) {
    NoGradGuard guard;
    target = resize_bilinear(y, y_up.dim(2), y_up.dim(3));
  }

  LossReport r;
  const Tensor up = l1(y_up, target);
  const Tensor rec = l1(y_hat, y);
  Tensor rest = ops::scale(rec, weights.rec);
  r.l_adv = plugin_term(plugins.adv, y_hat, y, weights.adv, rest);
  r.l_comp = plugin_term(plugins.comp, y_hat, y, weights.comp, rest);
  r.l_id = plugin_term(plugins.id, y_hat, y, weights.id, rest);
  r.total = ops::add(ops::scale(up, weights.lambda1), ops::scale(rest, weights.lambda2));
  r.l_up = up.item();
  r.l_rec = rec.item();
  r.l_rest = rest.item();
  r.l_total = r.total.item();
  return r;
}

double psnr(const Tensor& a, const Tensor& b, double peak) {
  same_shape(a, b, "psnr");
  const auto da = a.data(), db = b.data();
  double se = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    se += d * d;
  }
  const double mse = se / double(da.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "ssim");
  std::size_t h = 0, w = 0;
  const auto x = luma_planes(a, h, w);
  const auto y = luma_planes(b, h, w);
  if (h < kWindow || w < kWindow) {
    throw RangeError("ssim needs at least 11x11, got " + std::to_string(h) + "x" +
                     std::to_string(w));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += ssim_plane(x[i], y[i], h, w);
  return total / double(x.size());
}

}  // namespace scaleform::objective
