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


#ifndef SCALEFORM_OBJECTIVE_HPP_
#define SCALEFORM_OBJECTIVE_HPP_

#include <functional>

#include "scaleform/tensor.hpp"

namespace scaleform::objective {

struct LossWeights {
  double lambda1 = 0.01;  // upsampling term
  double lambda2 = 0.1;   // restoration term
  double rec = 0.1;
  double adv = 0.1;
  double comp = 0.1;
  double id = 1.0;

  void validate() const;  // ConfigError on negative weights
};

// Extra restoration terms evaluated on (y_hat, y). Empty means zero.
using LossPlugin = std::function<Tensor(const Tensor& y_hat, const Tensor& y)>;

struct LossPlugins {
  LossPlugin adv, comp, id;
};

struct LossReport {
  double l_up = 0, l_rec = 0, l_adv = 0, l_comp = 0, l_id = 0, l_rest = 0, l_total = 0;
  Tensor total;  // differentiable l_total
};

// Mean absolute difference; subgradient 0 where a == b.
Tensor l1(const Tensor& a, const Tensor& b);

// l_up = L1(y_up, y resized to y_up's size), l_rest = rec*L1(y_hat, y) +
// adv*adv + comp*comp + id*id, l_total = lambda1*l_up + lambda2*l_rest.
LossReport total_loss(const Tensor& y_up, const Tensor& y_hat, const Tensor& y,
                      const LossWeights& weights = {}, const LossPlugins& plugins = {});

constexpr double kPsnrCap = 99.0;

// 10 log10(peak^2 / MSE), capped at 99 dB.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

// Mean SSIM over the valid region of an 11x11 Gaussian window (sigma 1.5) on
// BT.601 luma. Accepts [3,H,W], [1,H,W], [H,W] or a batch [N,3,H,W] (mean
// over the batch). Throws RangeError below 11x11.
double ssim(const Tensor& a, const Tensor& b);

}  // namespace scaleform::objective

#endif  // SCALEFORM_OBJECTIVE_HPP_
