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

#include "scaleform/ffup.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "scaleform/errors.hpp"
#include "scaleform/ops.hpp"
#include "scaleform/sampling.hpp"

namespace scaleform::ffup {

void ScalePair::validate(double max_scale) const {
  auto ok = [max_scale](double s) { return std::isfinite(s) && s >= 1.0 && s <= max_scale; };
  if (!ok(horizontal) || !ok(vertical)) {
    throw RangeError("scale (" + std::to_string(horizontal) + ", " + std::to_string(vertical) +
                     ") outside [1, " + std::to_string(max_scale) + "]");
  }
}

bool ScalePair::clamp(double max_scale) {
  const ScalePair before = *this;
  horizontal = std::clamp(horizontal, 1.0, max_scale);
  vertical = std::clamp(vertical, 1.0, max_scale);
  return before.horizontal != horizontal || before.vertical != vertical;
}

SampleGrid::SampleGrid(std::size_t height, std::size_t width, ScalePair scale) : scale_(scale) {
  auto fill = [](std::size_t n, double s, std::vector<double>& prime, std::vector<double>& rel) {
    prime.resize(n);
    rel.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double proj = (static_cast<double>(i) + 0.5) / s;
      prime[i] = proj - 0.5;
      rel[i] = prime[i] - std::floor(proj);
    }
  };
  fill(width, scale.horizontal, x_prime_, rx_);
  fill(height, scale.vertical, y_prime_, ry_);
}

SampleGrid build_grid(std::size_t h_out, std::size_t w_out, ScalePair scale) {
  scale.validate(std::max({kDefaultMaxScale, scale.horizontal, scale.vertical}));
  if (h_out == 0 || w_out == 0) throw DimensionError("empty sample grid");
  return SampleGrid(h_out, w_out, scale);
}

std::size_t output_extent(std::size_t extent, double scale) { return scaled_extent(extent, scale); }

void FfupConfig::validate() const {
  if (channels == 0 || squeeze_ratio == 0 || channels % squeeze_ratio != 0) {
    throw ConfigError("ffup: channels (" + std::to_string(channels) +
                      ") must be divisible by squeeze_ratio (" + std::to_string(squeeze_ratio) +
                      ")");
  }
  if (hidden == 0) throw ConfigError("ffup: hidden width must be positive");
  if (kernel < 2) throw ConfigError("ffup: kernel must be >= 2");
  if (!(offset_clamp >= 0.0)) throw ConfigError("ffup: offset_clamp must be >= 0");
  if (!(max_scale >= 1.0)) throw ConfigError("ffup: max_scale must be >= 1");
}

FfupParams FfupParams::init(const FfupConfig& config, CounterRng& rng) {
  config.validate();
  const std::size_t c = config.channels, cm = config.squeezed(), h = config.hidden;
  FfupParams p;
  p.fc1_weight = uniform_param({4, h}, 1.0 / std::sqrt(4.0), rng);
  p.fc1_bias = constant_param({h}, 0.0);
  p.fc2_weight = uniform_param({h, h}, 1.0 / std::sqrt(double(h)), rng);
  p.fc2_bias = constant_param({h}, 0.0);
  // Small offset head so sampling starts close to the projected position.
  p.offset_weight = uniform_param({h, 2}, 0.1 / std::sqrt(double(h)), rng);
  p.offset_bias = constant_param({2}, 0.0);
  p.scale_weight = uniform_param({h, cm}, 1.0 / std::sqrt(double(h)), rng);
  p.scale_bias = constant_param({cm}, 1.0);
  p.squeeze_weight = uniform_param({cm, c, 1, 1}, 1.0 / std::sqrt(double(c)), rng);
  p.squeeze_bias = constant_param({cm}, 0.0);
  p.expand_weight = uniform_param({c, cm, 1, 1}, 1.0 / std::sqrt(double(cm)), rng);
  p.expand_bias = constant_param({c}, 0.0);
  if (config.kernel > 2) {
    const std::size_t taps = config.kernel * config.kernel;
    p.stack_weight = uniform_param({c, c * taps, 1, 1}, 1.0 / std::sqrt(double(c * taps)), rng);
    p.stack_bias = constant_param({c}, 0.0);
  }
  return p;
}

void FfupParams::zero_offset_head() {
  for (Tensor* t : {&offset_weight, &offset_bias}) std::ranges::fill(t->mutable_data(), 0.0);
}

void FfupParams::zero_expand() {
  for (Tensor* t : {&expand_weight, &expand_bias}) std::ranges::fill(t->mutable_data(), 0.0);
}

void FfupParams::collect(NamedTensors& out, const std::string& prefix) const {
  out.emplace_back(prefix + ".fc1.weight", fc1_weight);
  out.emplace_back(prefix + ".fc1.bias", fc1_bias);
  out.emplace_back(prefix + ".fc2.weight", fc2_weight);
  out.emplace_back(prefix + ".fc2.bias", fc2_bias);
  out.emplace_back(prefix + ".offset.weight", offset_weight);
  out.emplace_back(prefix + ".offset.bias", offset_bias);
  out.emplace_back(prefix + ".scale.weight", scale_weight);
  out.emplace_back(prefix + ".scale.bias", scale_bias);
  out.emplace_back(prefix + ".squeeze.weight", squeeze_weight);
  out.emplace_back(prefix + ".squeeze.bias", squeeze_bias);
  out.emplace_back(prefix + ".expand.weight", expand_weight);
  out.emplace_back(prefix + ".expand.bias", expand_bias);
  if (stack_weight.defined()) {
    out.emplace_back(prefix + ".stack.weight", stack_weight);
    out.emplace_back(prefix + ".stack.bias", stack_bias);
  }
}

Conditioning condition(const ScalePair& scale, const SampleGrid& grid, const FfupParams& params,
                       const FfupConfig& config) {
  const std::size_t h = grid.height(), w = grid.width();
  std::vector<double> rows(h * w * 4);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double* r = rows.data() + (y * w + x) * 4;
      r[0] = scale.horizontal;
      r[1] = scale.vertical;
      r[2] = grid.rx()[x];
      r[3] = grid.ry()[y];
    }
  const Tensor input({h * w, 4}, std::move(rows));
  Tensor hid = ops::relu(ops::linear(input, params.fc1_weight, params.fc1_bias));
  hid = ops::relu(ops::linear(hid, params.fc2_weight, params.fc2_bias));
  Tensor offsets = ops::linear(hid, params.offset_weight, params.offset_bias);
  offsets = ops::scale(ops::tanh(offsets), config.offset_clamp);
  Tensor weights = ops::linear(hid, params.scale_weight, params.scale_bias);
  return {ops::reshape(offsets, {h, w, 2}), ops::reshape(weights, {h, w, config.squeezed()})};
}

namespace {

struct PixelTaps {
  std::size_t idx[4];
  double w[4];
  double fx, fy;
  bool clamp_x, clamp_y;
};

}  // namespace

Tensor grid_sample(const Tensor& features, const SampleGrid& grid, const Tensor& offsets,
                   double shift_x, double shift_y) {
  if (features.ndim() != 4) throw DimensionError("grid_sample expects NCHW features");
  const std::size_t n = features.dim(0), c = features.dim(1);
  const std::size_t h = features.dim(2), w = features.dim(3);
  const std::size_t oh = grid.height(), ow = grid.width();
  const bool has_offsets = offsets.defined();
  if (has_offsets && offsets.shape() != Shape{oh, ow, 2}) {
    throw DimensionError("grid_sample offsets " + shape_str(offsets.shape()) + " for grid " +
                         std::to_string(oh) + "x" + std::to_string(ow));
  }
  const std::size_t plane = oh * ow;
  auto taps = std::make_shared<std::vector<PixelTaps>>(plane);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      const std::size_t p = y * ow + x;
      double cx = grid.x_prime()[x] + shift_x;
      double cy = grid.y_prime()[y] + shift_y;
      if (has_offsets) {
        cx += offsets.data()[p * 2];
        cy += offsets.data()[p * 2 + 1];
      }
      const LinearTaps tx = linear_taps(cx, w);
      const LinearTaps ty = linear_taps(cy, h);
      PixelTaps& t = (*taps)[p];
      t.idx[0] = ty.lo * w + tx.lo;
      t.idx[1] = ty.lo * w + tx.hi;
      t.idx[2] = ty.hi * w + tx.lo;
      t.idx[3] = ty.hi * w + tx.hi;
      t.w[0] = (1.0 - ty.frac) * (1.0 - tx.frac);
      t.w[1] = (1.0 - ty.frac) * tx.frac;
      t.w[2] = ty.frac * (1.0 - tx.frac);
      t.w[3] = ty.frac * tx.frac;
      t.fx = tx.frac;
      t.fy = ty.frac;
      t.clamp_x = tx.clamped;
      t.clamp_y = ty.clamped;
    }
  const auto fs = features.data();
  std::vector<double> out(n * c * plane);
  for (std::size_t pl = 0; pl < n * c; ++pl) {
    const double* src = fs.data() + pl * h * w;
    double* dst = out.data() + pl * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      const PixelTaps& t = (*taps)[p];
      dst[p] = t.w[0] * src[t.idx[0]] + t.w[1] * src[t.idx[1]] + t.w[2] * src[t.idx[2]] +
               t.w[3] * src[t.idx[3]];
    }
  }
  std::vector<Tensor> inputs{features};
  if (has_offsets) inputs.push_back(offsets);
  const std::size_t planes = n * c, in_plane = h * w;
  return make_result(
      "grid_sample", {n, c, oh, ow}, std::move(out), inputs,
      [features, taps, planes, plane, in_plane](std::span<const double> g,
                                                std::span<std::span<double>> gi) {
        const auto fs = features.data();
        const bool want_f = !gi[0].empty();
        const bool want_o = gi.size() > 1 && !gi[1].empty();
        for (std::size_t pl = 0; pl < planes; ++pl) {
          const double* src = fs.data() + pl * in_plane;
          const double* gp = g.data() + pl * plane;
          double* df = want_f ? gi[0].data() + pl * in_plane : nullptr;
          for (std::size_t p = 0; p < plane; ++p) {
            const PixelTaps& t = (*taps)[p];
            const double gv = gp[p];
            if (df) {
              for (int k = 0; k < 4; ++k) df[t.idx[k]] += t.w[k] * gv;
            }
            if (want_o) {
              const double v00 = src[t.idx[0]], v01 = src[t.idx[1]];
              const double v10 = src[t.idx[2]], v11 = src[t.idx[3]];
              if (!t.clamp_x)
                gi[1][p * 2] += gv * ((1.0 - t.fy) * (v01 - v00) + t.fy * (v11 - v10));
              if (!t.clamp_y)
                gi[1][p * 2 + 1] += gv * ((1.0 - t.fx) * (v10 - v00) + t.fx * (v11 - v01));
            }
          }
        }
      });
}

Tensor upsample(const Tensor& features, const ScalePair& scale, const FfupParams& params,
                const FfupConfig& config, Conditioning* conditioning_out) {
  config.validate();
  scale.validate(config.max_scale);
  if (features.ndim() != 4 || features.dim(1) != config.channels) {
    throw DimensionError("ffup expects [N," + std::to_string(config.channels) + ",H,W], got " +
                         shape_str(features.shape()));
  }
  const std::size_t h_out = output_extent(features.dim(2), scale.vertical);
  const std::size_t w_out = output_extent(features.dim(3), scale.horizontal);
  const SampleGrid grid = build_grid(h_out, w_out, scale);
  Conditioning cond = condition(scale, grid, params, config);

  Tensor sampled;
  if (config.kernel == 2) {
    sampled = grid_sample(features, grid, cond.offsets);
  } else {
    const double centre = 0.5 * static_cast<double>(config.kernel - 1);
    std::vector<Tensor> stack;
    for (std::size_t i = 0; i < config.kernel; ++i)
      for (std::size_t j = 0; j < config.kernel; ++j)
        stack.push_back(grid_sample(features, grid, cond.offsets, double(j) - centre,
                                    double(i) - centre));
    sampled = ops::conv2d(ops::concat(stack, 1), params.stack_weight, params.stack_bias);
  }

  const Tensor squeezed = ops::conv2d(sampled, params.squeeze_weight, params.squeeze_bias);
  const Tensor modulation = ops::reshape(ops::permute(cond.scale_weights, {2, 0, 1}),
                                         {1, config.squeezed(), h_out, w_out});
  const Tensor expanded =
      ops::conv2d(ops::mul(squeezed, modulation), params.expand_weight, params.expand_bias);
  if (conditioning_out) *conditioning_out = cond;
  return ops::add(expanded, sampled);
}

}  // namespace scaleform::ffup
