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


#ifndef SCALEFORM_FFE_HPP_
#define SCALEFORM_FFE_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "scaleform/params.hpp"
#include "scaleform/rng.hpp"
#include "scaleform/tensor.hpp"

// Windowed-transformer feature embedding.
namespace scaleform::ffe {

enum class Layout { kNCHW, kNHWC };

struct StbConfig {
  std::vector<std::size_t> depths{2, 4, 6, 2};
  std::size_t in_channels = 16;
  std::size_t dim = 32;
  std::size_t heads = 2;
  std::size_t window = 4;
  std::size_t mlp_ratio = 2;
  std::size_t out_channels = 32;
  std::size_t pos_size = 32;  // learned position table is pos_size x pos_size
  bool shift = true;          // alternate shifted windows on odd blocks

  std::size_t head_dim() const { return dim / heads; }
  // Smallest spatial size the stages accept: window * 2^(stages-1).
  std::size_t min_extent() const;
  void validate() const;
};

struct WindowSet {
  Tensor windows;  // [N * nW, window^2, C]
  Layout layout = Layout::kNCHW;
  std::size_t batch = 0, channels = 0, height = 0, width = 0;
  std::size_t padded_height = 0, padded_width = 0;
  std::size_t window = 0, shift = 0;

  std::size_t windows_per_image() const {
    return (padded_height / window) * (padded_width / window);
  }
  std::size_t tokens() const { return window * window; }
};

// Reflect-pads to a multiple of `window`, cyclically shifts by -shift and cuts
// non-overlapping windows. Pure data movement.
WindowSet window_partition(const Tensor& x, std::size_t window, std::size_t shift = 0,
                           Layout layout = Layout::kNCHW);
// Inverse of window_partition for `windows` laid out like `meta.windows`.
Tensor window_reverse(const WindowSet& meta, const Tensor& windows);
inline Tensor window_reverse(const WindowSet& w) { return window_reverse(w, w.windows); }

// keep[i * T + j] == 1 when tokens i and j of window `index` come from the
// same pre-shift window.
std::vector<std::uint8_t> shift_keep_mask(const WindowSet& w, std::size_t index);

struct AttentionParams {
  Tensor qkv_weight, qkv_bias;    // [C, 3C], [3C]
  Tensor proj_weight, proj_bias;  // [C, C], [C]
  Tensor rel_bias;                // [(2w-1)^2, heads]
};

struct AttentionTrace {
  Tensor weights;                  // [N * nW, heads, T, T]
  std::vector<std::uint8_t> keep;  // same extent as weights; empty when unmasked
};

AttentionParams init_attention(std::size_t dim, std::size_t heads, std::size_t window,
                               CounterRng& rng);

WindowSet window_attention(const WindowSet& w, const AttentionParams& params, std::size_t heads,
                           AttentionTrace* trace = nullptr);

struct BlockParams {
  Tensor norm1_weight, norm1_bias;
  AttentionParams attn;
  Tensor norm2_weight, norm2_bias;
  Tensor fc1_weight, fc1_bias;  // [C, C*ratio]
  Tensor fc2_weight, fc2_bias;  // [C*ratio, C]

  static BlockParams init(const StbConfig& config, CounterRng& rng);
  void zero_residual_branches();
  void collect(NamedTensors& out, const std::string& prefix) const;
};

// x is [N, H, W, C] tokens. Blocks with odd index shift windows by window/2
// unless min(H, W) <= window.
Tensor stb_block(const Tensor& x, const StbConfig& config, const BlockParams& params,
                 std::size_t block_index, AttentionTrace* trace = nullptr);

struct FfeParams {
  Tensor embed_weight, embed_bias;  // 1x1 conv in_channels -> dim
  Tensor position;                  // [1, dim, pos_size, pos_size]
  std::vector<Tensor> down_weight, down_bias;  // 2x2 stride 2, stages 1..S-1
  std::vector<std::vector<BlockParams>> blocks;
  Tensor final_weight, final_bias;  // 3x3 conv dim -> out_channels

  static FfeParams init(const StbConfig& config, CounterRng& rng);
  void zero_residual_branches();
  void collect(NamedTensors& out, const std::string& prefix = "ffe") const;
};

struct SemanticFeatures {
  Tensor semantic;              // [N, out_channels, H / 2^(S-1), W / 2^(S-1)]
  std::vector<Tensor> spatial;  // stage outputs, [N, dim, H / 2^i, W / 2^i]
};

// f_up is [N, in_channels, H, W]. Throws ConfigError when a stage would be
// smaller than the window.
SemanticFeatures extract_semantic(const Tensor& f_up, const StbConfig& config,
                                  const FfeParams& params);

}  // namespace scaleform::ffe

#endif  // SCALEFORM_FFE_HPP_
