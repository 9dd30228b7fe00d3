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


#ifndef SCALEFORM_CONFIG_HPP_
#define SCALEFORM_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scaleform/degrade.hpp"
#include "scaleform/net.hpp"
#include "scaleform/objective.hpp"
#include "scaleform/optim.hpp"

namespace scaleform {

// Flat `key = value` text with `[section]` headers and `#` comments. Keys are
// stored as "section.key".
class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text);
  static ConfigMap load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }
  // Later entries win.
  void merge(const ConfigMap& other);
  std::string to_text() const;

 private:
  std::map<std::string, std::string> entries_;
};

struct TrainConfig {
  optim::AdamConfig adam;
  std::uint64_t total_iters = 2000;
  std::vector<std::uint64_t> milestones{1750, 1875};
  double decay = 0.5;
  std::size_t batch = 2;
  std::uint64_t seed = 7;
  degrade::Range scale{2.0, 2.0};  // downsample factor range for training pairs
  degrade::DegradationRanges degradation = degrade::DegradationRanges::desk();
  bool resample_degradation = false;  // fresh degradation every iteration
  bool flip = true;  // random horizontal flips of whole pairs
  bool permute_channels = true;  // random RGB permutation of whole pairs
  bool resize_back = false;
  objective::LossWeights weights;
  std::uint64_t checkpoint_every = 0;

  optim::MultiStep schedule() const { return {adam.lr, milestones, decay}; }
  void validate() const;
};

struct RunConfig {
  NetConfig net;
  TrainConfig train;

  // Overrides defaults with every key in `map`; throws ConfigError on
  // unknown keys or malformed values.
  void apply(const ConfigMap& map);
  ConfigMap to_map() const;
  std::string to_text() const { return to_map().to_text(); }
  static RunConfig from_text(const std::string& text);
};

// Number formatting that round-trips doubles exactly.
std::string format_double(double v);

}  // namespace scaleform

#endif  // SCALEFORM_CONFIG_HPP_
