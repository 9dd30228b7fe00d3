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


#ifndef SCALEFORM_OPTIM_HPP_
#define SCALEFORM_OPTIM_HPP_

#include <cstdint>
#include <vector>

#include "scaleform/params.hpp"
#include "scaleform/tensor.hpp"

namespace scaleform::optim {

struct AdamConfig {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  std::vector<Tensor> m, v;  // aligned with the parameter list

  static AdamState zeros(const NamedTensors& params);
};

// One bias-corrected Adam update with learning rate `lr` using each
// parameter's accumulated gradient (missing gradients count as zero).
// Throws NumericError naming the parameter on a non-finite gradient.
void adam_step(const NamedTensors& params, AdamState& state, const AdamConfig& config, double lr);

struct MultiStep {
  double base = 2e-3;
  std::vector<std::uint64_t> milestones{1750, 1875};
  double decay = 0.5;

  void validate(std::uint64_t total_iters) const;  // ConfigError
};

// base * decay^(number of milestones <= iter).
double lr_schedule(std::uint64_t iter, const MultiStep& schedule);

}  // namespace scaleform::optim

#endif  // SCALEFORM_OPTIM_HPP_
