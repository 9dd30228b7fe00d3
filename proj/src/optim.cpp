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


#include "scaleform/optim.hpp"

#include <cmath>
#include <string>

#include "scaleform/errors.hpp"

namespace scaleform::optim {

AdamState AdamState::zeros(const NamedTensors& params) {
  AdamState s;
  for (const auto& [name, p] : params) {
    s.m.push_back(Tensor::zeros(p.shape()));
    s.v.push_back(Tensor::zeros(p.shape()));
  }
  return s;
}

void adam_step(const NamedTensors& params, AdamState& state, const AdamConfig& config, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("Adam state has " + std::to_string(state.m.size()) + " slots for " +
                         std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, p] = params[i];
    if (p.has_grad()) {
      for (double g : p.grad()) {
        if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + name);
      }
    }
  }
  ++state.step;
  const double t = double(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i].second;
    if (state.m[i].shape() != p.shape()) {
      throw DimensionError("Adam state shape mismatch for " + params[i].first);
    }
    auto w = p.mutable_data();
    auto m = state.m[i].mutable_data();
    auto v = state.v[i].mutable_data();
    const bool has = p.has_grad();
    const std::span<const double> g = has ? p.grad() : std::span<const double>{};
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = has ? g[k] : 0.0;
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * gk;
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * gk * gk;
      w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config.eps);
    }
  }
}

void MultiStep::validate(std::uint64_t total_iters) const {
  for (std::size_t i = 0; i < milestones.size(); ++i) {
    if (i > 0 && milestones[i] <= milestones[i - 1]) {
      throw ConfigError("milestones must be strictly increasing");
    }
    if (milestones[i] >= total_iters) {
      throw ConfigError("milestone " + std::to_string(milestones[i]) + " not below total_iters " +
                        std::to_string(total_iters));
    }
  }
  if (!(base > 0.0) || !(decay > 0.0)) throw ConfigError("lr and decay must be positive");
}

double lr_schedule(std::uint64_t iter, const MultiStep& schedule) {
  double lr = schedule.base;
  for (std::uint64_t m : schedule.milestones) {
    if (iter >= m) lr *= schedule.decay;
  }
  return lr;
}

}  // namespace scaleform::optim
