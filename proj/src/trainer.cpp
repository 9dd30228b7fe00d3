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


#include "scaleform/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <tuple>

#include "scaleform/errors.hpp"
#include "scaleform/objective.hpp"
#include "scaleform/ops.hpp"
#include "scaleform/rng.hpp"

namespace scaleform {

namespace {

Tensor stack_images(const std::vector<const Tensor*>& images) {
  const Tensor& first = *images.front();
  std::vector<double> data;
  data.reserve(images.size() * first.numel());
  for (const Tensor* t : images) data.insert(data.end(), t->data().begin(), t->data().end());
  return Tensor({images.size(), 3, first.dim(1), first.dim(2)}, std::move(data));
}

ffup::ScalePair pair_scale(const Tensor& lq, const Tensor& hq) {
  return {double(hq.dim(2)) / double(lq.dim(2)), double(hq.dim(1)) / double(lq.dim(1))};
}

using GroupKey = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>;

// Batch members grouped by (lq h, lq w, hq h, hq w), preserving first-seen order.
std::vector<std::vector<std::size_t>> group_by_size(const std::vector<TrainingPair>& pairs,
                                                    const std::vector<std::size_t>& members) {
  std::vector<GroupKey> keys;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t idx : members) {
    const auto& p = pairs[idx];
    const GroupKey key{p.lq.dim(1), p.lq.dim(2), p.hq.dim(1), p.hq.dim(2)};
    std::size_t g = 0;
    while (g < keys.size() && keys[g] != key) ++g;
    if (g == keys.size()) {
      keys.push_back(key);
      groups.emplace_back();
    }
    groups[g].push_back(idx);
  }
  return groups;
}

Tensor flip_horizontal(const Tensor& img) {
  const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  std::vector<double> out(img.numel());
  const auto d = img.data();
  for (std::size_t i = 0; i < c * h; ++i)
    for (std::size_t x = 0; x < w; ++x) out[i * w + x] = d[i * w + (w - 1 - x)];
  return Tensor(img.shape(), std::move(out));
}

// perm indexes the six orderings of (R, G, B); 0 is the identity.
Tensor permute_rgb(const Tensor& img, std::size_t perm) {
  static constexpr std::size_t kOrders[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  if (perm == 0) return img;
  const std::size_t plane = img.dim(1) * img.dim(2);
  std::vector<double> out(img.numel());
  const auto d = img.data();
  for (std::size_t c = 0; c < 3; ++c) {
    std::copy_n(d.begin() + std::ptrdiff_t(kOrders[perm][c] * plane), plane, out.begin() + std::ptrdiff_t(c * plane));
  }
  return Tensor(img.shape(), std::move(out));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string LossRow::tsv() const {
  return std::to_string(iter) + "\t" + fmt(lr) + "\t" + fmt(l_up) + "\t" + fmt(l_rec) + "\t" +
         fmt(l_rest) + "\t" + fmt(l_total);
}

std::string loss_log_header() { return "iter\tlr\tl_up\tl_rec\tl_rest\tl_total"; }

degrade::DegradationRanges training_ranges(const TrainConfig& train) {
  degrade::DegradationRanges ranges = train.degradation;
  ranges.r = train.scale;
  return ranges;
}

std::vector<TrainingPair> make_pairs(const std::vector<Tensor>& hq, const TrainConfig& train) {
  const auto ranges = training_ranges(train);
  degrade::DegradeOptions options;
  options.resize_back = train.resize_back;
  std::vector<TrainingPair> pairs;
  pairs.reserve(hq.size());
  for (std::size_t i = 0; i < hq.size(); ++i) {
    const auto spec = degrade::sample_spec(ranges, train.seed, i);
    auto d = degrade::degrade(hq[i], spec, options);
    pairs.push_back({hq[i], d.lq, d.spec});
  }
  return pairs;
}

Trainer::Trainer(RunConfig config, std::vector<Tensor> hq) : config_(std::move(config)), hq_(std::move(hq)) {
  if (hq_.empty()) throw UsageError("training dataset is empty");
  config_.net.link();
  config_.train.validate();
  pairs_ = make_pairs(hq_, config_.train);
  params_ = NetParams::init(config_.net, config_.train.seed);
  named_ = params_.named();
  for (auto& [name, t] : named_) t.set_requires_grad(true);
  adam_ = optim::AdamState::zeros(named_);
}

Trainer Trainer::resume(const Checkpoint& ck, std::vector<Tensor> hq) {
  RunConfig config = RunConfig::from_text(ck.config_text);
  Trainer t(std::move(config), std::move(hq));
  if (ck.rng_seed != t.config_.train.seed) throw FormatError("checkpoint seed does not match its config");
  if (ck.rng_counter != ck.iteration * t.config_.train.batch) {
    throw FormatError("checkpoint sample counter does not match its iteration");
  }
  assign_params(t.named_, ck.params);
  if (ck.adam.m.size() != t.named_.size()) throw FormatError("checkpoint Adam state size mismatch");
  for (std::size_t i = 0; i < t.named_.size(); ++i) {
    if (ck.params[i].first != t.named_[i].first) throw FormatError("checkpoint parameter order mismatch");
    t.adam_.m[i] = ck.adam.m[i].clone();
    t.adam_.v[i] = ck.adam.v[i].clone();
  }
  t.adam_.step = ck.adam.step;
  t.iteration_ = ck.iteration;
  return t;
}

const std::vector<std::size_t>& Trainer::epoch_order(std::uint64_t epoch) {
  auto it = orders_.find(epoch);
  if (it != orders_.end()) return it->second;
  if (orders_.size() > 4) orders_.erase(orders_.begin());
  std::vector<std::size_t> order(pairs_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(config_.train.seed, "train.shuffle", epoch);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = std::size_t(rng.next_u64() % i);
    std::swap(order[i - 1], order[j]);
  }
  return orders_.emplace(epoch, std::move(order)).first->second;
}

std::vector<std::size_t> Trainer::batch_indices(std::uint64_t iter) {
  const std::size_t n = pairs_.size(), batch = config_.train.batch;
  std::vector<std::size_t> out;
  out.reserve(batch);
  for (std::size_t j = 0; j < batch; ++j) {
    const std::uint64_t pos = iter * batch + j;
    out.push_back(epoch_order(pos / n)[pos % n]);
  }
  return out;
}

LossRow Trainer::step() {
  if (done()) throw UsageError("training already finished");
  const auto& tc = config_.train;
  const std::uint64_t iter = iteration_;
  const double lr = optim::lr_schedule(iter, tc.schedule());
  const auto members = batch_indices(iter);

  if (tc.resample_degradation) {
    const auto ranges = training_ranges(tc);
    degrade::DegradeOptions options;
    options.resize_back = tc.resize_back;
    for (std::size_t j = 0; j < members.size(); ++j) {
      auto& p = pairs_[members[j]];
      const auto spec = degrade::sample_spec(ranges, tc.seed, (iter + 1) * pairs_.size() * tc.batch + j);
      auto d = degrade::degrade(p.hq, spec, options);
      p.lq = d.lq;
      p.spec = d.spec;
    }
  }

  std::vector<TrainingPair> batch;
  for (std::size_t j = 0; j < members.size(); ++j) {
    TrainingPair p = pairs_[members[j]];
    CounterRng rng(tc.seed, "train.augment", iter * tc.batch + j);
    const std::uint64_t draw = rng.next_u64();
    if (tc.flip && (draw & 1)) {
      p.hq = flip_horizontal(p.hq);
      p.lq = flip_horizontal(p.lq);
    }
    if (tc.permute_channels) {
      const std::size_t perm = std::size_t((draw >> 1) % 6);
      p.hq = permute_rgb(p.hq, perm);
      p.lq = permute_rgb(p.lq, perm);
    }
    batch.push_back(std::move(p));
  }

  for (auto& [name, t] : named_) t.zero_grad();
  LossRow row;
  row.iter = iter;
  row.lr = lr;
  Tensor total;
  std::vector<std::size_t> all(batch.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (const auto& group : group_by_size(batch, all)) {
    std::vector<const Tensor*> lqs, hqs;
    for (std::size_t idx : group) {
      lqs.push_back(&batch[idx].lq);
      hqs.push_back(&batch[idx].hq);
    }
    const Tensor lq = stack_images(lqs), hq = stack_images(hqs);
    const NetOutput out = forward(lq, pair_scale(*lqs.front(), *hqs.front()), config_.net, params_);
    const auto report = objective::total_loss(out.y_up, out.y_hat, hq, tc.weights);
    const double w = double(group.size()) / double(batch.size());
    row.l_up += w * report.l_up;
    row.l_rec += w * report.l_rec;
    row.l_rest += w * report.l_rest;
    row.l_total += w * report.l_total;
    const Tensor part = w == 1.0 ? report.total : ops::scale(report.total, w);
    total = total.defined() ? ops::add(total, part) : part;
  }
  if (!std::isfinite(row.l_total)) throw NumericError("non-finite loss at iteration " + std::to_string(iter));
  backward(total);
  optim::adam_step(named_, adam_, tc.adam, lr);
  ++iteration_;
  return row;
}

void Trainer::run(std::uint64_t until, const std::function<void(const LossRow&)>& on_row) {
  until = std::min(until, config_.train.total_iters);
  while (iteration_ < until) {
    const LossRow row = step();
    if (on_row) on_row(row);
  }
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.iteration = iteration_;
  ck.rng_seed = config_.train.seed;
  ck.rng_counter = iteration_ * config_.train.batch;
  ck.config_text = config_.to_text();
  ck.params = named_;
  ck.adam = adam_;
  return ck;
}

double Trainer::train_l1() const {
  NoGradGuard guard;
  double sum = 0.0;
  for (const auto& p : pairs_) {
    const Tensor lq = stack_images({&p.lq}), hq = stack_images({&p.hq});
    const NetOutput out = forward(lq, pair_scale(p.lq, p.hq), config_.net, params_);
    sum += objective::l1(out.y_hat, hq).item();
  }
  return sum / double(pairs_.size());
}

Model load_model(const std::filesystem::path& checkpoint) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  Model m;
  m.config = RunConfig::from_text(ck.config_text).net;
  m.config.link();
  m.params = NetParams::init(m.config, 0);
  assign_params(m.params.named(), ck.params);
  return m;
}

Restored restore(const Model& model, const Tensor& lq, ffup::ScalePair scale,
                 const std::function<void(const std::string&)>& warn) {
  if (lq.ndim() != 3 || lq.dim(0) != 3) throw DimensionError("restore expects a [3,h,w] image");
  Restored r;
  const auto requested = scale;
  r.clamped = scale.clamp(model.config.ffup.max_scale);
  if (r.clamped && warn) {
    warn("scale (" + fmt(requested.horizontal) + ", " + fmt(requested.vertical) + ") clamped to (" +
         fmt(scale.horizontal) + ", " + fmt(scale.vertical) + ")");
  }
  r.scale = scale;
  NoGradGuard guard;
  const NetOutput out = forward(stack_images({&lq}), scale, model.config, model.params);
  const Tensor& y = out.y_hat;
  r.image = Tensor({3, y.dim(2), y.dim(3)}, std::vector<double>(y.data().begin(), y.data().end()));
  return r;
}

}  // namespace scaleform
