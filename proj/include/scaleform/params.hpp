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

#ifndef SCALEFORM_PARAMS_HPP_
#define SCALEFORM_PARAMS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "scaleform/rng.hpp"
#include "scaleform/tensor.hpp"

namespace scaleform {

// Ordered (name, parameter) list. Names follow the checkpoint convention,
// e.g. "ffe.stage1.block0.attn.qkv.weight".
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Trainable leaf drawn from U(-bound, bound).
Tensor uniform_param(Shape shape, double bound, CounterRng& rng);
// Trainable leaf drawn from N(0, std^2).
Tensor normal_param(Shape shape, double std, CounterRng& rng);
Tensor constant_param(Shape shape, double value);

// Copies values (not handles) from `src` into the same-named tensors of `dst`.
// Throws FormatError on a missing name or shape mismatch.
void assign_params(const NamedTensors& dst, const NamedTensors& src);

std::size_t count_values(const NamedTensors& params);

}  // namespace scaleform

#endif  // SCALEFORM_PARAMS_HPP_
