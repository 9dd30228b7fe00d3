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

#ifndef SCALEFORM_GRADCHECK_HPP_
#define SCALEFORM_GRADCHECK_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scaleform/params.hpp"
#include "scaleform/tensor.hpp"

namespace scaleform {

struct GradcheckOptions {
  double step = 1e-6;
  double tolerance = 1e-5;
  // 0 checks every entry; otherwise a seeded random subset per tensor.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct TensorGradcheck {
  std::string name;
  std::size_t checked = 0;
  double max_error = 0.0;
};

struct GradcheckReport {
  std::vector<TensorGradcheck> tensors;
  double max_error = 0.0;
  double tolerance = 0.0;

  bool passed() const { return max_error <= tolerance; }
  std::vector<std::string> offenders() const;
  std::string summary() const;
};

// |a - n| / max(1, |a|, |n|)
double hybrid_error(double analytic, double numeric);

// Compares reverse-mode gradients of `loss_fn` against central differences
// with respect to each named tensor. `loss_fn` must rebuild the graph from the
// current tensor values on every call.
GradcheckReport gradcheck(const std::function<Tensor()>& loss_fn, const NamedTensors& params,
                          const GradcheckOptions& options = {});

// Fixed random projection: sum(x * r) with r ~ U(-1, 1) from `seed`. Turns any
// output into a smooth scalar for gradient checking.
Tensor random_projection(const Tensor& x, std::uint64_t seed);

}  // namespace scaleform

#endif  // SCALEFORM_GRADCHECK_HPP_
