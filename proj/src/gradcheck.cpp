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

#include "scaleform/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "scaleform/ops.hpp"
#include "scaleform/rng.hpp"

namespace scaleform {

double hybrid_error(double analytic, double numeric) {
  const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
  return std::fabs(analytic - numeric) / denom;
}

std::vector<std::string> GradcheckReport::offenders() const {
  std::vector<std::string> out;
  for (const auto& t : tensors)
    if (t.max_error > tolerance) out.push_back(t.name);
  return out;
}

std::string GradcheckReport::summary() const {
  std::ostringstream os;
  os.precision(3);
  for (const auto& t : tensors) {
    os << (t.max_error <= tolerance ? "ok   " : "FAIL ") << t.name << "  checked=" << t.checked
       << "  max_err=" << std::scientific << t.max_error << std::defaultfloat << '\n';
  }
  os << "max hybrid rel-err " << std::scientific << max_error << " (tolerance " << tolerance
     << ")\n";
  return os.str();
}

GradcheckReport gradcheck(const std::function<Tensor()>& loss_fn, const NamedTensors& params,
                          const GradcheckOptions& options) {
  for (const auto& p : params) {
    Tensor t = p.second;
    t.zero_grad();
  }
  backward(loss_fn());

  GradcheckReport report;
  report.tolerance = options.tolerance;
  CounterRng rng(options.seed, "gradcheck.subset");
  for (const auto& [name, param] : params) {
    Tensor t = param;
    const std::size_t n = t.numel();
    std::vector<double> analytic(n, 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());

    std::vector<std::size_t> entries(n);
    std::iota(entries.begin(), entries.end(), 0);
    if (options.max_entries_per_tensor != 0 && n > options.max_entries_per_tensor) {
      for (std::size_t i = 0; i < options.max_entries_per_tensor; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (n - i));
        std::swap(entries[i], entries[j]);
      }
      entries.resize(options.max_entries_per_tensor);
    }

    TensorGradcheck tc{name, entries.size(), 0.0};
    NoGradGuard no_grad;
    for (std::size_t e : entries) {
      auto data = t.mutable_data();
      const double original = data[e];
      data[e] = original + options.step;
      const double up = loss_fn().item();
      data[e] = original - options.step;
      const double down = loss_fn().item();
      data[e] = original;
      const double numeric = (up - down) / (2.0 * options.step);
      tc.max_error = std::max(tc.max_error, hybrid_error(analytic[e], numeric));
    }
    report.max_error = std::max(report.max_error, tc.max_error);
    report.tensors.push_back(std::move(tc));
  }
  return report;
}

Tensor random_projection(const Tensor& x, std::uint64_t seed) {
  CounterRng rng(seed, "gradcheck.projection");
  std::vector<double> r(x.numel());
  for (double& v : r) v = rng.uniform(-1.0, 1.0);
  return ops::sum(ops::mul(x, Tensor(x.shape(), std::move(r))));
}

}  // namespace scaleform
