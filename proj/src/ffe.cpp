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


#include "scaleform/ffe.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scaleform/errors.hpp"
#include "scaleform/ops.hpp"
#include "scaleform/sampling.hpp"

namespace scaleform::ffe {

std::size_t StbConfig::min_extent() const {
  return window << (depths.empty() ? 0 : depths.size() - 1);
}

void StbConfig::validate() const {
  if (depths.empty()) throw ConfigError("ffe needs at least one stage");
  for (std::size_t d : depths) {
    if (d == 0) throw ConfigError("ffe stage depth must be positive");
  }
  if (dim == 0 || heads == 0 || dim % heads != 0) {
    throw ConfigError("ffe dim " + std::to_string(dim) + " not divisible by heads " +
                      std::to_string(heads));
  }
  if (window == 0 || in_channels == 0 || out_channels == 0 || mlp_ratio == 0 || pos_size == 0) {
    throw ConfigError("ffe sizes must be positive");
  }
}

namespace {

std::size_t reflect(std::size_t p, std::size_t n) {
  if (n == 1) return 0;
  const std::size_t period = 2 * (n - 1);
  const std::size_t m = p % period;
  return m < n ? m : period - m;
}

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

std::size_t source_offset(const WindowSet& w, std::size_t n, std::size_t c, std::size_t y,
                          std::size_t x) {
  if (w.layout == Layout::kNCHW) return ((n * w.channels + c) * w.height + y) * w.width + x;
  return ((n * w.height + y) * w.width + x) * w.channels + c;
}

Tensor layer_norm(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return ops::add(ops::mul(ops::layernorm(x, -1), weight), bias);
}

}  // namespace

WindowSet window_partition(const Tensor& x, std::size_t window, std::size_t shift,
                           Layout layout) {
  if (x.ndim() != 4) throw DimensionError("window_partition expects a 4-d map");
  if (window == 0) throw ConfigError("window must be positive");
  WindowSet w;
  w.layout = layout;
  w.batch = x.dim(0);
  if (layout == Layout::kNCHW) {
    w.channels = x.dim(1), w.height = x.dim(2), w.width = x.dim(3);
  } else {
    w.height = x.dim(1), w.width = x.dim(2), w.channels = x.dim(3);
  }
  w.window = window;
  w.padded_height = round_up(w.height, window);
  w.padded_width = round_up(w.width, window);
  w.shift = shift % std::min(w.padded_height, w.padded_width);

  const std::size_t nwx = w.padded_width / window, nw = w.windows_per_image();
  const std::size_t t_count = w.tokens(), c_count = w.channels;
  std::vector<std::size_t> index(w.batch * nw * t_count * c_count);
  std::size_t o = 0;
  for (std::size_t n = 0; n < w.batch; ++n)
    for (std::size_t wi = 0; wi < nw; ++wi)
      for (std::size_t t = 0; t < t_count; ++t) {
        const std::size_t hp = (wi / nwx) * window + t / window;
        const std::size_t wp = (wi % nwx) * window + t % window;
        const std::size_t y = reflect((hp + w.shift) % w.padded_height, w.height);
        const std::size_t xx = reflect((wp + w.shift) % w.padded_width, w.width);
        for (std::size_t c = 0; c < c_count; ++c) index[o++] = source_offset(w, n, c, y, xx);
      }
  w.windows = ops::gather(x, {w.batch * nw, t_count, c_count}, std::move(index));
  return w;
}

Tensor window_reverse(const WindowSet& meta, const Tensor& windows) {
  if (windows.shape() != meta.windows.shape()) {
    throw DimensionError("window_reverse shape " + shape_str(windows.shape()));
  }
  const std::size_t window = meta.window, nwx = meta.padded_width / window;
  const std::size_t nw = meta.windows_per_image(), t_count = meta.tokens();
  const std::size_t n_count = meta.batch, c_count = meta.channels;
  const std::size_t h_count = meta.height, w_count = meta.width;
  auto window_offset = [&](std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    const std::size_t hp = (y + meta.padded_height - meta.shift) % meta.padded_height;
    const std::size_t wp = (x + meta.padded_width - meta.shift) % meta.padded_width;
    const std::size_t wi = (hp / window) * nwx + wp / window;
    const std::size_t t = (hp % window) * window + wp % window;
    return ((n * nw + wi) * t_count + t) * c_count + c;
  };
  std::vector<std::size_t> index(n_count * c_count * h_count * w_count);
  std::size_t o = 0;
  Shape shape;
  if (meta.layout == Layout::kNCHW) {
    shape = {n_count, c_count, h_count, w_count};
    for (std::size_t n = 0; n < n_count; ++n)
      for (std::size_t c = 0; c < c_count; ++c)
        for (std::size_t y = 0; y < h_count; ++y)
          for (std::size_t x = 0; x < w_count; ++x) index[o++] = window_offset(n, c, y, x);
  } else {
    shape = {n_count, h_count, w_count, c_count};
    for (std::size_t n = 0; n < n_count; ++n)
      for (std::size_t y = 0; y < h_count; ++y)
        for (std::size_t x = 0; x < w_count; ++x)
          for (std::size_t c = 0; c < c_count; ++c) index[o++] = window_offset(n, c, y, x);
  }
  return ops::gather(windows, std::move(shape), std::move(index));
}

std::vector<std::uint8_t> shift_keep_mask(const WindowSet& w, std::size_t index) {
  const std::size_t t_count = w.tokens(), nwx = w.padded_width / w.window;
  std::vector<std::uint8_t> keep(t_count * t_count, 1);
  if (w.shift == 0) return keep;
  std::vector<int> label(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    const std::size_t hp = (index / nwx) * w.window + t / w.window;
    const std::size_t wp = (index % nwx) * w.window + t % w.window;
    label[t] = (hp + w.shift >= w.padded_height ? 2 : 0) + (wp + w.shift >= w.padded_width ? 1 : 0);
  }
  for (std::size_t i = 0; i < t_count; ++i)
    for (std::size_t j = 0; j < t_count; ++j) keep[i * t_count + j] = label[i] == label[j];
  return keep;
}

AttentionParams init_attention(std::size_t dim, std::size_t heads, std::size_t window,
                               CounterRng& rng) {
  const double bound = 1.0 / std::sqrt(double(dim));
  const std::size_t span = 2 * window - 1;
  AttentionParams p;
  p.qkv_weight = uniform_param({dim, 3 * dim}, bound, rng);
  p.qkv_bias = constant_param({3 * dim}, 0.0);
  p.proj_weight = uniform_param({dim, dim}, bound, rng);
  p.proj_bias = constant_param({dim}, 0.0);
  p.rel_bias = normal_param({span * span, heads}, 0.02, rng);
  return p;
}

WindowSet window_attention(const WindowSet& w, const AttentionParams& params, std::size_t heads,
                           AttentionTrace* trace) {
  const std::size_t b = w.windows.dim(0), t_count = w.windows.dim(1), c = w.windows.dim(2);
  if (heads == 0 || c % heads != 0) {
    throw ConfigError("channels " + std::to_string(c) + " not divisible by heads " +
                      std::to_string(heads));
  }
  const std::size_t dh = c / heads, span = 2 * w.window - 1;
  if (params.rel_bias.shape() != Shape{span * span, heads}) {
    throw DimensionError("relative bias table " + shape_str(params.rel_bias.shape()));
  }

  Tensor qkv = ops::linear(w.windows, params.qkv_weight, params.qkv_bias);
  qkv = ops::permute(ops::reshape(qkv, {b, t_count, 3, heads, dh}), {2, 0, 3, 1, 4});
  auto part = [&](std::size_t i) {
    return ops::reshape(ops::slice(qkv, 0, i, 1), {b * heads, t_count, dh});
  };
  const Tensor q = part(0), k = part(1), v = part(2);

  std::vector<std::size_t> bias_index(heads * t_count * t_count);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < t_count; ++i)
      for (std::size_t j = 0; j < t_count; ++j) {
        const std::size_t dy = i / w.window + w.window - 1 - j / w.window;
        const std::size_t dx = i % w.window + w.window - 1 - j % w.window;
        bias_index[(h * t_count + i) * t_count + j] = (dy * span + dx) * heads + h;
      }
  const Tensor bias =
      ops::gather(params.rel_bias, {heads, t_count, t_count}, std::move(bias_index));

  Tensor logits = ops::scale(ops::bmm(q, k, true), 1.0 / std::sqrt(double(dh)));
  logits = ops::add(ops::reshape(logits, {b, heads, t_count, t_count}), bias);

  std::vector<std::uint8_t> keep;
  if (w.shift > 0) {
    const std::size_t nw = w.windows_per_image(), tt = t_count * t_count;
    std::vector<std::vector<std::uint8_t>> per_window(nw);
    for (std::size_t i = 0; i < nw; ++i) per_window[i] = shift_keep_mask(w, i);
    keep.reserve(b * heads * tt);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t h = 0; h < heads; ++h)
        keep.insert(keep.end(), per_window[i % nw].begin(), per_window[i % nw].end());
  }
  const Tensor attn = ops::softmax(logits, -1, keep);
  if (trace != nullptr) {
    trace->weights = attn.detach();
    trace->keep = keep;
  }

  Tensor out = ops::bmm(ops::reshape(attn, {b * heads, t_count, t_count}), v);
  out = ops::permute(ops::reshape(out, {b, heads, t_count, dh}), {0, 2, 1, 3});
  out = ops::linear(ops::reshape(out, {b, t_count, c}), params.proj_weight, params.proj_bias);

  WindowSet result = w;
  result.windows = out;
  return result;
}

BlockParams BlockParams::init(const StbConfig& config, CounterRng& rng) {
  const std::size_t c = config.dim, hidden = config.dim * config.mlp_ratio;
  BlockParams p;
  p.norm1_weight = constant_param({c}, 1.0);
  p.norm1_bias = constant_param({c}, 0.0);
  p.attn = init_attention(c, config.heads, config.window, rng);
  p.norm2_weight = constant_param({c}, 1.0);
  p.norm2_bias = constant_param({c}, 0.0);
  p.fc1_weight = uniform_param({c, hidden}, 1.0 / std::sqrt(double(c)), rng);
  p.fc1_bias = constant_param({hidden}, 0.0);
  p.fc2_weight = uniform_param({hidden, c}, 1.0 / std::sqrt(double(hidden)), rng);
  p.fc2_bias = constant_param({c}, 0.0);
  return p;
}

void BlockParams::zero_residual_branches() {
  for (Tensor* t : {&attn.proj_weight, &attn.proj_bias, &fc2_weight, &fc2_bias}) {
    std::ranges::fill(t->mutable_data(), 0.0);
  }
}

void BlockParams::collect(NamedTensors& out, const std::string& prefix) const {
  out.emplace_back(prefix + ".norm1.weight", norm1_weight);
  out.emplace_back(prefix + ".norm1.bias", norm1_bias);
  out.emplace_back(prefix + ".attn.qkv.weight", attn.qkv_weight);
  out.emplace_back(prefix + ".attn.qkv.bias", attn.qkv_bias);
  out.emplace_back(prefix + ".attn.proj.weight", attn.proj_weight);
  out.emplace_back(prefix + ".attn.proj.bias", attn.proj_bias);
  out.emplace_back(prefix + ".attn.rel_bias", attn.rel_bias);
  out.emplace_back(prefix + ".norm2.weight", norm2_weight);
  out.emplace_back(prefix + ".norm2.bias", norm2_bias);
  out.emplace_back(prefix + ".mlp.fc1.weight", fc1_weight);
  out.emplace_back(prefix + ".mlp.fc1.bias", fc1_bias);
  out.emplace_back(prefix + ".mlp.fc2.weight", fc2_weight);
  out.emplace_back(prefix + ".mlp.fc2.bias", fc2_bias);
}

Tensor stb_block(const Tensor& x, const StbConfig& config, const BlockParams& params,
                 std::size_t block_index, AttentionTrace* trace) {
  if (x.ndim() != 4 || x.dim(3) != config.dim) {
    throw DimensionError("stb_block expects [N,H,W," + std::to_string(config.dim) + "], got " +
                         shape_str(x.shape()));
  }
  const bool shifted = config.shift && block_index % 2 == 1 &&
                       std::min(x.dim(1), x.dim(2)) > config.window;
  const std::size_t shift = shifted ? config.window / 2 : 0;

  const Tensor normed = layer_norm(x, params.norm1_weight, params.norm1_bias);
  const WindowSet windows = window_partition(normed, config.window, shift, Layout::kNHWC);
  const WindowSet attended = window_attention(windows, params.attn, config.heads, trace);
  const Tensor y = ops::add(x, window_reverse(attended));

  Tensor m = layer_norm(y, params.norm2_weight, params.norm2_bias);
  m = ops::gelu(ops::linear(m, params.fc1_weight, params.fc1_bias));
  m = ops::linear(m, params.fc2_weight, params.fc2_bias);
  return ops::add(y, m);
}

FfeParams FfeParams::init(const StbConfig& config, CounterRng& rng) {
  config.validate();
  const std::size_t d = config.dim;
  FfeParams p;
  p.embed_weight = uniform_param({d, config.in_channels, 1, 1},
                                 1.0 / std::sqrt(double(config.in_channels)), rng);
  p.embed_bias = constant_param({d}, 0.0);
  p.position = normal_param({1, d, config.pos_size, config.pos_size}, 0.02, rng);
  for (std::size_t s = 0; s < config.depths.size(); ++s) {
    if (s > 0) {
      p.down_weight.push_back(uniform_param({d, d, 2, 2}, 1.0 / std::sqrt(4.0 * d), rng));
      p.down_bias.push_back(constant_param({d}, 0.0));
    }
    std::vector<BlockParams> stage;
    for (std::size_t j = 0; j < config.depths[s]; ++j) stage.push_back(BlockParams::init(config, rng));
    p.blocks.push_back(std::move(stage));
  }
  p.final_weight = uniform_param({config.out_channels, d, 3, 3}, 1.0 / std::sqrt(9.0 * d), rng);
  p.final_bias = constant_param({config.out_channels}, 0.0);
  return p;
}

void FfeParams::zero_residual_branches() {
  for (auto& stage : blocks)
    for (auto& block : stage) block.zero_residual_branches();
}

void FfeParams::collect(NamedTensors& out, const std::string& prefix) const {
  out.emplace_back(prefix + ".embed.weight", embed_weight);
  out.emplace_back(prefix + ".embed.bias", embed_bias);
  out.emplace_back(prefix + ".position", position);
  for (std::size_t s = 0; s < blocks.size(); ++s) {
    const std::string stage = prefix + ".stage" + std::to_string(s);
    if (s > 0) {
      out.emplace_back(stage + ".down.weight", down_weight[s - 1]);
      out.emplace_back(stage + ".down.bias", down_bias[s - 1]);
    }
    for (std::size_t j = 0; j < blocks[s].size(); ++j) {
      blocks[s][j].collect(out, stage + ".block" + std::to_string(j));
    }
  }
  out.emplace_back(prefix + ".final.weight", final_weight);
  out.emplace_back(prefix + ".final.bias", final_bias);
}

SemanticFeatures extract_semantic(const Tensor& f_up, const StbConfig& config,
                                  const FfeParams& params) {
  config.validate();
  if (f_up.ndim() != 4 || f_up.dim(1) != config.in_channels) {
    throw DimensionError("extract_semantic expects [N," + std::to_string(config.in_channels) +
                         ",H,W], got " + shape_str(f_up.shape()));
  }
  if (params.blocks.size() != config.depths.size()) {
    throw ConfigError("ffe parameters have " + std::to_string(params.blocks.size()) +
                      " stages, config has " + std::to_string(config.depths.size()));
  }
  std::size_t h = f_up.dim(2), w = f_up.dim(3);
  for (std::size_t s = 0; s < config.depths.size(); ++s) {
    if (s > 0) h = (h + 1) / 2, w = (w + 1) / 2;
    if (std::min(h, w) < config.window) {
      throw ConfigError("stage " + std::to_string(s) + " is " + std::to_string(h) + "x" +
                        std::to_string(w) + ", smaller than window " +
                        std::to_string(config.window));
    }
  }

  Tensor x = ops::conv2d(f_up, params.embed_weight, params.embed_bias, 1, 0);
  Tensor position = params.position;
  if (position.dim(2) != x.dim(2) || position.dim(3) != x.dim(3)) {
    position = resize_bilinear(position, x.dim(2), x.dim(3));
  }
  x = ops::add(x, position);

  SemanticFeatures out;
  for (std::size_t s = 0; s < config.depths.size(); ++s) {
    if (s > 0) {
      x = pad_edge(x, round_up(x.dim(2), 2), round_up(x.dim(3), 2));
      x = ops::conv2d(x, params.down_weight[s - 1], params.down_bias[s - 1], 2, 0);
    }
    Tensor tokens = ops::permute(x, {0, 2, 3, 1});
    for (std::size_t j = 0; j < config.depths[s]; ++j) {
      tokens = stb_block(tokens, config, params.blocks[s][j], j);
    }
    x = ops::permute(tokens, {0, 3, 1, 2});
    out.spatial.push_back(x);
  }
  out.semantic = ops::conv2d(x, params.final_weight, params.final_bias, 1, 1);
  return out;
}

}  // namespace scaleform::ffe
