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


#ifndef SCALEFORM_TOYGEN_HPP_
#define SCALEFORM_TOYGEN_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "scaleform/params.hpp"
#include "scaleform/rng.hpp"
#include "scaleform/tensor.hpp"

// Small modulated decoder standing in for a pretrained generative prior.
namespace scaleform::toygen {

struct ToygenConfig {
  std::size_t semantic_channels = 32;
  std::size_t skip_channels = 32;
  std::size_t latent_dim = 64;
  std::size_t mapping_hidden = 64;
  std::size_t channels = 16;  // decoder width
  std::size_t stages = 4;
  std::size_t start_size = 4;  // learned constant is start_size x start_size

  void validate() const;
};

struct LatentCode {
  std::vector<Tensor> codes;  // one [N, latent_dim] per decoder stage
};

struct StageParams {
  Tensor conv_weight, conv_bias;    // [C, C, 3, 3], [C]
  Tensor scale_weight, scale_bias;  // [L, C], [C] (bias starts at 1)
  Tensor shift_weight, shift_bias;  // [L, C], [C]
  Tensor skip_weight, skip_bias;    // [C, C_skip, 1, 1], [C]
};

struct ToygenParams {
  Tensor fc1_weight, fc1_bias;  // [C_sem, hidden]
  Tensor fc2_weight, fc2_bias;  // [hidden, stages * L]
  Tensor constant;              // [1, C, start, start]
  std::vector<StageParams> stages;
  Tensor rgb_weight, rgb_bias;  // [3, C, 1, 1], [3]

  static ToygenParams init(const ToygenConfig& config, CounterRng& rng);
  void zero_mapping_bias();
  void collect(NamedTensors& out, const std::string& prefix = "gen") const;
};

// Global average pool, two-layer MLP, split into per-stage codes.
LatentCode map_latent(const Tensor& f_semantic, const ToygenConfig& config,
                      const ToygenParams& params);

// skips[i] must be [N, skip_channels, 2^(i+1) h0, 2^(i+1) w0]; the decode
// starts from the learned constant resized to h0 x w0. Output is
// [N, 3, 2^stages h0, 2^stages w0] in [-1, 1].
Tensor decode(const LatentCode& latent, const std::vector<Tensor>& skips,
              const ToygenConfig& config, const ToygenParams& params);

}  // namespace scaleform::toygen

#endif  // SCALEFORM_TOYGEN_HPP_
