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


#include "scaleform/net.hpp"

#include <algorithm>
#include <cmath>

#include "scaleform/errors.hpp"
#include "scaleform/ops.hpp"
#include "scaleform/sampling.hpp"

namespace scaleform {

void NetConfig::link() {
  if (channels == 0) throw ConfigError("net channels must be positive");
  ffup.channels = channels;
  ffe.in_channels = channels;
  gen.semantic_channels = ffe.out_channels;
  gen.skip_channels = ffe.dim;
  gen.stages = ffe.depths.size();
  ffup.validate();
  ffe.validate();
  gen.validate();
}

std::size_t NetConfig::pad_multiple() const { return std::size_t(1) << gen.stages; }

std::size_t NetConfig::padded_extent(std::size_t extent) const {
  const std::size_t m = pad_multiple();
  return std::max((extent + m - 1) / m * m, ffe.min_extent());
}

namespace {

void fill(Tensor& t, double v) { std::ranges::fill(t.mutable_data(), v); }

// Sets w[o, i, centre] = gain for o, i < count on a zeroed kernel.
void diagonal(Tensor& w, std::size_t count, double gain) {
  fill(w, 0.0);
  const std::size_t in = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  for (std::size_t c = 0; c < count; ++c) {
    w.mutable_data()[((c * in + c) * kh + kh / 2) * kw + kw / 2] = gain;
  }
}

}  // namespace

NetParams NetParams::init(const NetConfig& config, std::uint64_t seed) {
  NetConfig cfg = config;
  cfg.link();
  const std::size_t c = cfg.channels;
  NetParams p;
  CounterRng head(seed, "init.head");
  p.head_weight = uniform_param({c, 3, 3, 3}, 1.0 / std::sqrt(27.0), head);
  p.head_bias = constant_param({c}, 0.0);
  p.res1_weight = uniform_param({c, c, 3, 3}, 1.0 / std::sqrt(9.0 * c), head);
  p.res1_bias = constant_param({c}, 0.0);
  p.res2_weight = uniform_param({c, c, 3, 3}, 1.0 / std::sqrt(9.0 * c), head);
  p.res2_bias = constant_param({c}, 0.0);
  CounterRng up(seed, "init.ffup");
  p.ffup = ffup::FfupParams::init(cfg.ffup, up);
  p.up_rgb_weight = uniform_param({3, c, 1, 1}, 1.0 / std::sqrt(double(c)), up);
  p.up_rgb_bias = constant_param({3}, 0.0);
  CounterRng fe(seed, "init.ffe");
  p.ffe = ffe::FfeParams::init(cfg.ffe, fe);
  CounterRng gen(seed, "init.gen");
  p.gen = toygen::ToygenParams::init(cfg.gen, gen);
  return p;
}

NetParams NetParams::identity(const NetConfig& config) {
  NetConfig cfg = config;
  cfg.link();
  if (cfg.channels < 3 || cfg.ffe.dim < 3 || cfg.gen.channels < 3) {
    throw ConfigError("identity parameters need at least 3 channels everywhere");
  }
  NetParams p = init(cfg, 0);
  diagonal(p.head_weight, 3, 1.0);
  fill(p.res2_weight, 0.0);
  p.ffup.zero_offset_head();
  p.ffup.zero_expand();
  diagonal(p.up_rgb_weight, 3, 1.0);
  diagonal(p.ffe.embed_weight, 3, 1.0);
  fill(p.ffe.position, 0.0);
  p.ffe.zero_residual_branches();
  toygen::StageParams& last = p.gen.stages.back();
  fill(last.conv_weight, 0.0);
  fill(last.conv_bias, 0.0);
  fill(last.shift_weight, 0.0);
  diagonal(last.skip_weight, 3, 1.0);
  diagonal(p.gen.rgb_weight, 3, 1.0);
  return p;
}

NamedTensors NetParams::named() const {
  NamedTensors out{{"net.head.weight", head_weight}, {"net.head.bias", head_bias},
                   {"net.res1.weight", res1_weight}, {"net.res1.bias", res1_bias},
                   {"net.res2.weight", res2_weight}, {"net.res2.bias", res2_bias}};
  ffup.collect(out);
  out.emplace_back("net.up_rgb.weight", up_rgb_weight);
  out.emplace_back("net.up_rgb.bias", up_rgb_bias);
  ffe.collect(out);
  gen.collect(out);
  return out;
}

NetOutput forward(const Tensor& lq, const ffup::ScalePair& scale, const NetConfig& config,
                  const NetParams& params) {
  if (lq.ndim() != 4 || lq.dim(1) != 3) {
    throw DimensionError("forward expects [N,3,h,w], got " + shape_str(lq.shape()));
  }
  const Tensor x = ops::add_scalar(ops::scale(lq, 2.0), -1.0);
  Tensor f = ops::conv2d(x, params.head_weight, params.head_bias, 1, 1);
  Tensor r = ops::relu(ops::conv2d(f, params.res1_weight, params.res1_bias, 1, 1));
  f = ops::add(f, ops::conv2d(r, params.res2_weight, params.res2_bias, 1, 1));

  const Tensor f_up = ffup::upsample(f, scale, params.ffup, config.ffup);
  const std::size_t h = f_up.dim(2), w = f_up.dim(3);
  NetOutput out;
  out.scale = scale;
  out.y_up = ops::add_scalar(
      ops::scale(ops::conv2d(f_up, params.up_rgb_weight, params.up_rgb_bias, 1, 0), 0.5), 0.5);

  const Tensor padded = pad_edge(f_up, config.padded_extent(h), config.padded_extent(w));
  const ffe::SemanticFeatures sem = ffe::extract_semantic(padded, config.ffe, params.ffe);
  const toygen::LatentCode latent = toygen::map_latent(sem.semantic, config.gen, params.gen);
  const std::vector<Tensor> skips(sem.spatial.rbegin(), sem.spatial.rend());
  const Tensor decoded = toygen::decode(latent, skips, config.gen, params.gen);
  out.y_hat = ops::add_scalar(ops::scale(crop(decoded, h, w), 0.5), 0.5);
  return out;
}

}  // namespace scaleform
