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


#ifndef SCALEFORM_GRADCHECK_SUITE_HPP_
#define SCALEFORM_GRADCHECK_SUITE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scaleform/gradcheck.hpp"

namespace scaleform {

struct SuiteResult {
  std::string module;
  std::string name;
  std::uint64_t seed = 0;
  GradcheckReport report;
};

// Selectors accepted by run_gradcheck_suite besides "all".
std::vector<std::string> gradcheck_modules();

// Finite-difference checks over toy-sized graphs for the selected module,
// one run per seed in [first_seed, first_seed + seeds). "negative-control"
// runs a deliberately wrong backward rule and is expected to fail; it is not
// part of "all". Throws UsageError for an unknown selector.
std::vector<SuiteResult> run_gradcheck_suite(const std::string& selector, std::uint64_t first_seed,
                                             std::size_t seeds,
                                             const std::function<void(const SuiteResult&)>& on_result = {});

}  // namespace scaleform

#endif  // SCALEFORM_GRADCHECK_SUITE_HPP_
