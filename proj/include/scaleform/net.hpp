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


#ifndef SCALEFORM_NET_HPP_
#define SCALEFORM_NET_HPP_

#include <cstddef>
#include <string>

#include "scaleform/ffe.hpp"
#include "scaleform/ffup.hpp"
#include "scaleform/params.hpp"
#include "scaleform/rng.hpp"
#include "scaleform/tensor.hpp"
#include "scaleform/toygen.hpp"

// The full restoration network: shallow head, FFUP, FFE and the decoder.
namespace scaleform {

struct NetConfig {
  std::size_t channels = 16;
  ffup::FfupConfig ffup;
  ffe::StbConfig ffe;
  toygen::ToygenConfig gen;

  // Copies the shared widths into the sub-configs and validates them.
  void link();
  // Feature maps entering the embedding are edge-padded to a multiple of
  // this and to at least window * 2^(stages-1).
  std::size_t pad_multiple() const;
  std::size_t padded_extent(std::size_t extent) const;
};

struct NetParams {
  Tensor head_weight, head_bias;  // 3x3, 3 -> C
  Tensor res1_weight, res1_bias;  // 3x3, C -> C
  Tensor res2_weight, res2_bias;  // 3x3, C -> C
  ffup::FfupParams ffup;
  Tensor up_rgb_weight, up_rgb_bias;  // 1x1, C -> 3
  ffe::FfeParams ffe;
  toygen::ToygenParams gen;

  static NetParams init(const NetConfig& config, std::uint64_t seed);
  // Parameters under which restoration at scale (1, 1) passes the input
  // through (up to the output tanh).
  static NetParams identity(const NetConfig& config);
  NamedTensors named() const;
};

struct NetOutput {
  Tensor y_up;   // RGB head on F_up, [N,3,H,W] in image units
  Tensor y_hat;  // restored image, [N,3,H,W] in [0, 1]
  ffup::ScalePair scale;
};

// lq is [N,3,h,w] in [0, 1]. Output extent is round(s * extent) per axis.
NetOutput forward(const Tensor& lq, const ffup::ScalePair& scale, const NetConfig& config,
                  const NetParams& params);

}  // namespace scaleform

#endif  // SCALEFORM_NET_HPP_
