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


#ifndef SCALEFORM_TRAINER_HPP_
#define SCALEFORM_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scaleform/checkpoint.hpp"
#include "scaleform/config.hpp"
#include "scaleform/degrade.hpp"
#include "scaleform/net.hpp"
#include "scaleform/optim.hpp"

namespace scaleform {

struct LossRow {
  std::uint64_t iter = 0;
  double lr = 0, l_up = 0, l_rec = 0, l_rest = 0, l_total = 0;

  std::string tsv() const;  // one line, no newline, %.17g fields
};

// "iter\tlr\tl_up\tl_rec\tl_rest\tl_total"
std::string loss_log_header();

struct TrainingPair {
  Tensor hq;  // [3,H,W]
  Tensor lq;  // [3,h,w]
  degrade::DegradationSpec spec;
};

// Degradation ranges used for training: the configured ranges with the
// downsample factor drawn from train.scale.
degrade::DegradationRanges training_ranges(const TrainConfig& train);

// Degrades every image once; pair i uses sample_spec(ranges, seed, i).
std::vector<TrainingPair> make_pairs(const std::vector<Tensor>& hq, const TrainConfig& train);

class Trainer {
 public:
  Trainer(RunConfig config, std::vector<Tensor> hq);
  // Resumes from a checkpoint; the run configuration comes from its text.
  static Trainer resume(const Checkpoint& ck, std::vector<Tensor> hq);

  // One optimisation step; throws NumericError on a non-finite loss or grad.
  LossRow step();
  // Steps until `until` iterations are complete (capped at train.iters).
  void run(std::uint64_t until, const std::function<void(const LossRow&)>& on_row = {});

  Checkpoint checkpoint() const;
  // Mean L1 between restorations and ground truth over all training pairs.
  double train_l1() const;

  std::uint64_t iteration() const { return iteration_; }
  bool done() const { return iteration_ >= config_.train.total_iters; }
  const RunConfig& config() const { return config_; }
  const NetParams& params() const { return params_; }
  const std::vector<TrainingPair>& pairs() const { return pairs_; }

 private:
  std::vector<std::size_t> batch_indices(std::uint64_t iter);
  const std::vector<std::size_t>& epoch_order(std::uint64_t epoch);

  RunConfig config_;
  NetParams params_;
  NamedTensors named_;
  optim::AdamState adam_;
  std::vector<Tensor> hq_;
  std::vector<TrainingPair> pairs_;
  std::uint64_t iteration_ = 0;
  std::map<std::uint64_t, std::vector<std::size_t>> orders_;
};

struct Model {
  NetConfig config;
  NetParams params;
};

Model load_model(const std::filesystem::path& checkpoint);

struct Restored {
  Tensor image;  // [3,H,W] in [0, 1]
  ffup::ScalePair scale;  // after clamping
  bool clamped = false;
};

// Single forward pass at the requested scale. Scales outside
// [1, ffup.max_scale] are clamped with a warning through `warn`.
Restored restore(const Model& model, const Tensor& lq, ffup::ScalePair scale,
                 const std::function<void(const std::string&)>& warn = {});

}  // namespace scaleform

#endif  // SCALEFORM_TRAINER_HPP_
