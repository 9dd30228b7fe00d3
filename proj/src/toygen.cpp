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


#include "scaleform/toygen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scaleform/errors.hpp"
#include "scaleform/ops.hpp"
#include "scaleform/sampling.hpp"

namespace scaleform::toygen {

void ToygenConfig::validate() const {
  if (semantic_channels == 0 || skip_channels == 0 || latent_dim == 0 || mapping_hidden == 0 ||
      channels == 0 || stages == 0 || start_size == 0) {
    throw ConfigError("toygen sizes must be positive");
  }
}

ToygenParams ToygenParams::init(const ToygenConfig& config, CounterRng& rng) {
  config.validate();
  const std::size_t c = config.channels, l = config.latent_dim, h = config.mapping_hidden;
  ToygenParams p;
  p.fc1_weight = uniform_param({config.semantic_channels, h},
                               1.0 / std::sqrt(double(config.semantic_channels)), rng);
  p.fc1_bias = constant_param({h}, 0.0);
  p.fc2_weight = uniform_param({h, config.stages * l}, 1.0 / std::sqrt(double(h)), rng);
  p.fc2_bias = constant_param({config.stages * l}, 0.0);
  p.constant = normal_param({1, c, config.start_size, config.start_size}, 1.0, rng);
  const double mod_bound = 0.1 / std::sqrt(double(l));
  for (std::size_t i = 0; i < config.stages; ++i) {
    StageParams s;
    s.conv_weight = uniform_param({c, c, 3, 3}, 1.0 / std::sqrt(9.0 * c), rng);
    s.conv_bias = constant_param({c}, 0.0);
    s.scale_weight = uniform_param({l, c}, mod_bound, rng);
    s.scale_bias = constant_param({c}, 1.0);
    s.shift_weight = uniform_param({l, c}, mod_bound, rng);
    s.shift_bias = constant_param({c}, 0.0);
    s.skip_weight = uniform_param({c, config.skip_channels, 1, 1},
                                  1.0 / std::sqrt(double(config.skip_channels)), rng);
    s.skip_bias = constant_param({c}, 0.0);
    p.stages.push_back(std::move(s));
  }
  p.rgb_weight = uniform_param({3, c, 1, 1}, 1.0 / std::sqrt(double(c)), rng);
  p.rgb_bias = constant_param({3}, 0.0);
  return p;
}

void ToygenParams::zero_mapping_bias() {
  std::ranges::fill(fc1_bias.mutable_data(), 0.0);
  std::ranges::fill(fc2_bias.mutable_data(), 0.0);
}

void ToygenParams::collect(NamedTensors& out, const std::string& prefix) const {
  out.emplace_back(prefix + ".mapping.fc1.weight", fc1_weight);
  out.emplace_back(prefix + ".mapping.fc1.bias", fc1_bias);
  out.emplace_back(prefix + ".mapping.fc2.weight", fc2_weight);
  out.emplace_back(prefix + ".mapping.fc2.bias", fc2_bias);
  out.emplace_back(prefix + ".constant", constant);
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string s = prefix + ".stage" + std::to_string(i);
    out.emplace_back(s + ".conv.weight", stages[i].conv_weight);
    out.emplace_back(s + ".conv.bias", stages[i].conv_bias);
    out.emplace_back(s + ".mod_scale.weight", stages[i].scale_weight);
    out.emplace_back(s + ".mod_scale.bias", stages[i].scale_bias);
    out.emplace_back(s + ".mod_shift.weight", stages[i].shift_weight);
    out.emplace_back(s + ".mod_shift.bias", stages[i].shift_bias);
    out.emplace_back(s + ".skip.weight", stages[i].skip_weight);
    out.emplace_back(s + ".skip.bias", stages[i].skip_bias);
  }
  out.emplace_back(prefix + ".to_rgb.weight", rgb_weight);
  out.emplace_back(prefix + ".to_rgb.bias", rgb_bias);
}

LatentCode map_latent(const Tensor& f_semantic, const ToygenConfig& config,
                      const ToygenParams& params) {
  if (f_semantic.ndim() != 4 || f_semantic.dim(1) != config.semantic_channels) {
    throw DimensionError("map_latent expects [N," + std::to_string(config.semantic_channels) +
                         ",h,w], got " + shape_str(f_semantic.shape()));
  }
  const std::size_t n = f_semantic.dim(0), c = f_semantic.dim(1);
  const Tensor pooled =
      ops::mean_axis(ops::reshape(f_semantic, {n, c, f_semantic.dim(2) * f_semantic.dim(3)}), 2);
  Tensor h = ops::gelu(ops::linear(pooled, params.fc1_weight, params.fc1_bias));
  h = ops::linear(h, params.fc2_weight, params.fc2_bias);
  LatentCode latent;
  for (std::size_t i = 0; i < config.stages; ++i) {
    latent.codes.push_back(ops::slice(h, 1, i * config.latent_dim, config.latent_dim));
  }
  return latent;
}

Tensor decode(const LatentCode& latent, const std::vector<Tensor>& skips,
              const ToygenConfig& config, const ToygenParams& params) {
  if (latent.codes.size() != config.stages || skips.size() != config.stages ||
      params.stages.size() != config.stages) {
    throw DimensionError("decode expects " + std::to_string(config.stages) + " stages, got " +
                         std::to_string(latent.codes.size()) + " codes and " +
                         std::to_string(skips.size()) + " skips");
  }
  const Tensor& first = skips.front();
  if (first.ndim() != 4 || first.dim(2) % 2 != 0 || first.dim(3) % 2 != 0) {
    throw DimensionError("first skip must be an even-sized map, got " + shape_str(first.shape()));
  }
  const std::size_t n = first.dim(0), c = config.channels;

  Tensor x = params.constant;
  const std::size_t h0 = first.dim(2) / 2, w0 = first.dim(3) / 2;
  if (x.dim(2) != h0 || x.dim(3) != w0) x = resize_bilinear(x, h0, w0);
  if (n > 1) {
    const std::size_t per = c * h0 * w0;
    std::vector<std::size_t> index(n * per);
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = i % per;
    x = ops::gather(x, {n, c, h0, w0}, std::move(index));
  }

  for (std::size_t i = 0; i < config.stages; ++i) {
    const StageParams& sp = params.stages[i];
    x = ops::conv2d(upsample_nearest2x(x), sp.conv_weight, sp.conv_bias, 1, 1);
    const Tensor& skip = skips[i];
    if (skip.ndim() != 4 || skip.dim(0) != n || skip.dim(1) != config.skip_channels ||
        skip.dim(2) != x.dim(2) || skip.dim(3) != x.dim(3)) {
      throw DimensionError("stage " + std::to_string(i) + " is " + shape_str(x.shape()) +
                           " but skip is " + shape_str(skip.shape()));
    }
    const Tensor& code = latent.codes[i];
    if (code.ndim() != 2 || code.dim(0) != n || code.dim(1) != config.latent_dim) {
      throw DimensionError("latent code " + shape_str(code.shape()));
    }
    const Tensor gamma =
        ops::reshape(ops::linear(code, sp.scale_weight, sp.scale_bias), {n, c, 1, 1});
    const Tensor beta =
        ops::reshape(ops::linear(code, sp.shift_weight, sp.shift_bias), {n, c, 1, 1});
    x = ops::gelu(ops::add(ops::mul(x, gamma), beta));
    x = ops::add(x, ops::conv2d(skip, sp.skip_weight, sp.skip_bias, 1, 0));
  }
  return ops::tanh(ops::conv2d(x, params.rgb_weight, params.rgb_bias, 1, 0));
}

}  // namespace scaleform::toygen
