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


#ifndef SCALEFORM_SYNTH_HPP_
#define SCALEFORM_SYNTH_HPP_

#include <cstddef>
#include <cstdint>

#include "scaleform/tensor.hpp"

namespace scaleform::synth {

// Procedural toy face: shaded background, hair, skin ellipse, eyes, brows,
// nose shading and mouth, all with soft edges. [3,size,size] in [0, 1];
// deterministic in (seed, index).
Tensor face(std::size_t size, std::uint64_t seed, std::uint64_t index);

}  // namespace scaleform::synth

#endif  // SCALEFORM_SYNTH_HPP_
