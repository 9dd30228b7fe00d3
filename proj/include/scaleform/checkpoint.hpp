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


#ifndef SCALEFORM_CHECKPOINT_HPP_
#define SCALEFORM_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "scaleform/optim.hpp"
#include "scaleform/params.hpp"

// Container layout (little-endian):
//   "FFCK" | u32 version | u64 iteration | u64 rng seed | u64 rng counter
//   | u64 len + config text | u64 adam step | u64 count
//   | count x (u32 len + name | FTNS param | FTNS m | FTNS v)
namespace scaleform {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint64_t iteration = 0;  // number of completed steps
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_counter = 0;  // next stream index consumed by the trainer
  std::string config_text;
  NamedTensors params;
  optim::AdamState adam;
};

// Writes to a temporary sibling first, then renames.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
// Throws FormatError on bad magic, version, or truncation.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace scaleform

#endif  // SCALEFORM_CHECKPOINT_HPP_
