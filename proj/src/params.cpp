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

#include "scaleform/params.hpp"

#include "scaleform/errors.hpp"

namespace scaleform {

Tensor uniform_param(Shape shape, double bound, CounterRng& rng) {
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = rng.uniform(-bound, bound);
  return Tensor(std::move(shape), std::move(data), true);
}

Tensor normal_param(Shape shape, double std, CounterRng& rng) {
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = std * rng.normal();
  return Tensor(std::move(shape), std::move(data), true);
}

Tensor constant_param(Shape shape, double value) {
  return Tensor::full(std::move(shape), value, true);
}

void assign_params(const NamedTensors& dst, const NamedTensors& src) {
  for (const auto& [name, tensor] : dst) {
    const Tensor* found = nullptr;
    for (const auto& [sname, stensor] : src) {
      if (sname == name) {
        found = &stensor;
        break;
      }
    }
    if (!found) throw FormatError("missing parameter " + name);
    if (found->shape() != tensor.shape()) {
      throw FormatError("shape mismatch for " + name + ": " + shape_str(found->shape()) +
                        " vs " + shape_str(tensor.shape()));
    }
    Tensor target = tensor;
    auto out = target.mutable_data();
    const auto in = found->data();
    std::copy(in.begin(), in.end(), out.begin());
  }
}

std::size_t count_values(const NamedTensors& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.second.numel();
  return n;
}

}  // namespace scaleform
