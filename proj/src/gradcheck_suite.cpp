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


#include "scaleform/gradcheck_suite.hpp"

#include <algorithm>
#include <utility>

#include "scaleform/errors.hpp"
#include "scaleform/ffe.hpp"
#include "scaleform/ffup.hpp"
#include "scaleform/net.hpp"
#include "scaleform/ops.hpp"
#include "scaleform/sampling.hpp"
#include "scaleform/toygen.hpp"

namespace scaleform {

namespace {

using Leaves = std::vector<Tensor>;
using Body = std::function<Tensor(const Leaves&)>;

struct Case {
  std::string name;
  std::vector<Shape> shapes;
  Body body;
  double lo = -1.0, hi = 1.0;
};

Tensor random_leaf(const Shape& shape, std::uint64_t seed, std::uint64_t index, double lo, double hi) {
  CounterRng rng(seed, "gradcheck.leaf", index);
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = rng.uniform(lo, hi);
  return Tensor(shape, std::move(data), true);
}

// Moves parameters off their init (zero biases put ReLUs on a kink).
void randomize(const NamedTensors& named, std::uint64_t seed, double bound) {
  CounterRng rng(seed, "gradcheck.params");
  for (const auto& [name, t] : named) {
    Tensor handle = t;
    for (double& v : handle.mutable_data()) v = rng.uniform(-bound, bound);
    handle.set_requires_grad(true);
  }
}

GradcheckReport check_case(const Case& c, std::uint64_t seed) {
  Leaves leaves;
  NamedTensors named;
  for (std::size_t i = 0; i < c.shapes.size(); ++i) {
    leaves.push_back(random_leaf(c.shapes[i], seed, i, c.lo, c.hi));
    named.emplace_back("in" + std::to_string(i), leaves.back());
  }
  return gradcheck([&] { return random_projection(c.body(leaves), seed + 77); }, named);
}

std::vector<Case> primitive_cases() {
  using V = Leaves;
  std::vector<Case> cs;
  cs.push_back({"matmul", {{3, 4}, {4, 2}}, [](const V& t) { return ops::matmul(t[0], t[1]); }});
  cs.push_back({"bmm", {{2, 3, 4}, {2, 4, 5}}, [](const V& t) { return ops::bmm(t[0], t[1]); }});
  cs.push_back({"bmm_transposed", {{2, 3, 4}, {2, 5, 4}}, [](const V& t) { return ops::bmm(t[0], t[1], true); }});
  cs.push_back({"linear", {{2, 3, 4}, {4, 5}, {5}}, [](const V& t) { return ops::linear(t[0], t[1], t[2]); }});
  cs.push_back({"conv2d", {{2, 2, 5, 5}, {3, 2, 3, 3}, {3}},
                [](const V& t) { return ops::conv2d(t[0], t[1], t[2], 1, 1); }});
  cs.push_back({"conv2d_stride2", {{1, 2, 6, 6}, {2, 2, 2, 2}, {2}},
                [](const V& t) { return ops::conv2d(t[0], t[1], t[2], 2, 0); }});
  cs.push_back({"add", {{2, 3, 4}, {3, 1}}, [](const V& t) { return ops::add(t[0], t[1]); }});
  cs.push_back({"sub", {{1, 4}, {3, 1}}, [](const V& t) { return ops::sub(t[0], t[1]); }});
  cs.push_back({"mul", {{2, 3, 4}, {1, 3, 1}}, [](const V& t) { return ops::mul(t[0], t[1]); }});
  cs.push_back({"scale", {{6}}, [](const V& t) { return ops::add_scalar(ops::scale(t[0], -2.5), 1.0); }});
  cs.push_back({"relu", {{20}}, [](const V& t) { return ops::relu(t[0]); }});
  cs.push_back({"gelu", {{20}}, [](const V& t) { return ops::gelu(t[0]); }, -3, 3});
  cs.push_back({"tanh", {{20}}, [](const V& t) { return ops::tanh(t[0]); }, -3, 3});
  cs.push_back({"abs", {{20}}, [](const V& t) { return ops::abs(t[0]); }});
  cs.push_back({"square", {{20}}, [](const V& t) { return ops::square(t[0]); }});
  cs.push_back({"sum", {{3, 4}}, [](const V& t) { return ops::sum(t[0]); }});
  cs.push_back({"mean", {{3, 4}}, [](const V& t) { return ops::mean(t[0]); }});
  cs.push_back({"sum_axis", {{3, 4, 2}}, [](const V& t) { return ops::sum_axis(t[0], 1); }});
  cs.push_back({"mean_axis", {{3, 4, 2}}, [](const V& t) { return ops::mean_axis(t[0], -1, true); }});
  cs.push_back({"layernorm", {{3, 5, 2}}, [](const V& t) { return ops::layernorm(t[0], 1); }});
  cs.push_back({"softmax", {{3, 5, 2}}, [](const V& t) { return ops::softmax(t[0], 1); }, -3, 3});
  cs.push_back({"softmax_masked", {{2, 3}}, [](const V& t) {
                  static const std::vector<std::uint8_t> keep{1, 1, 0, 0, 1, 1};
                  return ops::softmax(t[0], -1, keep);
                }});
  cs.push_back({"reshape", {{2, 6}}, [](const V& t) { return ops::reshape(t[0], {3, 4}); }});
  cs.push_back({"permute", {{2, 3, 4}}, [](const V& t) { return ops::permute(t[0], {2, 0, 1}); }});
  cs.push_back({"gather", {{4}}, [](const V& t) { return ops::gather(t[0], {6}, {0, 0, 3, 2, 3, 1}); }});
  cs.push_back({"concat", {{2, 3}, {2, 1}}, [](const V& t) { return ops::concat({t[0], t[1]}, 1); }});
  cs.push_back({"slice", {{4, 5}}, [](const V& t) { return ops::slice(t[0], 1, 1, 3); }});
  cs.push_back({"resample_bilinear", {{1, 2, 5, 4}},
                [](const V& t) { return resample_bilinear(t[0], 7, 9, 1.4, 2.25); }});
  cs.push_back({"upsample_nearest2x", {{1, 2, 3, 2}}, [](const V& t) { return upsample_nearest2x(t[0]); }});
  cs.push_back({"pad_edge", {{1, 2, 3, 2}}, [](const V& t) { return pad_edge(t[0], 5, 4); }});
  cs.push_back({"crop", {{1, 2, 5, 4}}, [](const V& t) { return crop(t[0], 3, 2); }});
  return cs;
}

// A square whose backward rule forgets the factor 2.
Tensor corrupted_square(const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v *= v;
  const std::vector<double> saved(x.data().begin(), x.data().end());
  return make_result("corrupted_square", x.shape(), std::move(out), {x},
                     [saved](std::span<const double> g, std::span<std::span<double>> grads) {
                       if (grads[0].empty()) return;
                       for (std::size_t i = 0; i < saved.size(); ++i) grads[0][i] += g[i] * saved[i];
                     });
}

using Runner = std::function<GradcheckReport(std::uint64_t)>;

std::vector<std::pair<std::string, Runner>> ffup_cases() {
  std::vector<std::pair<std::string, Runner>> cs;
  cs.emplace_back("grid_sample", [](std::uint64_t seed) {
    const Tensor f = random_leaf({1, 2, 5, 6}, seed, 0, -1, 1);
    const Tensor off = random_leaf({8, 9, 2}, seed, 1, -0.9, 0.9);
    const auto g = ffup::build_grid(8, 9, {1.5, 1.6});
    return gradcheck([&] { return random_projection(ffup::grid_sample(f, g, off), seed); },
                     {{"features", f}, {"offsets", off}});
  });
  for (std::size_t kernel : {std::size_t(2), std::size_t(3)}) {
    cs.emplace_back("upsample_k" + std::to_string(kernel), [kernel](std::uint64_t seed) {
      ffup::FfupConfig cfg;
      cfg.channels = 4;
      cfg.hidden = 8;
      cfg.kernel = kernel;
      CounterRng rng(seed, "gradcheck.init");
      const auto p = ffup::FfupParams::init(cfg, rng);
      NamedTensors named;
      p.collect(named);
      randomize(named, seed, 0.6);
      const Tensor f = random_leaf({2, 4, 4, 5}, seed, 2, -1, 1);
      named.emplace_back("features", f);
      const ffup::ScalePair s{1.5 + 0.1 * double(seed % 10), 1.75};
      return gradcheck([&] { return random_projection(ffup::upsample(f, s, p, cfg), seed); }, named);
    });
  }
  return cs;
}

ffe::StbConfig tiny_stb() {
  ffe::StbConfig cfg;
  cfg.depths = {2, 1};
  cfg.in_channels = 3;
  cfg.dim = 4;
  cfg.heads = 2;
  cfg.window = 2;
  cfg.out_channels = 3;
  cfg.pos_size = 4;
  return cfg;
}

std::vector<std::pair<std::string, Runner>> ffe_cases() {
  std::vector<std::pair<std::string, Runner>> cs;
  cs.emplace_back("window_attention", [](std::uint64_t seed) {
    const auto cfg = tiny_stb();
    CounterRng rng(seed, "gradcheck.init");
    const auto p = ffe::init_attention(cfg.dim, cfg.heads, cfg.window, rng);
    NamedTensors named{{"qkv.weight", p.qkv_weight}, {"qkv.bias", p.qkv_bias},
                       {"proj.weight", p.proj_weight}, {"proj.bias", p.proj_bias},
                       {"rel_bias", p.rel_bias}};
    randomize(named, seed, 0.5);
    const Tensor x = random_leaf({1, 4, 4, 4}, seed, 0, -1, 1);
    named.emplace_back("x", x);
    return gradcheck(
        [&] {
          const auto w = ffe::window_partition(x, cfg.window, 1, ffe::Layout::kNHWC);
          return random_projection(ffe::window_reverse(ffe::window_attention(w, p, cfg.heads)), seed);
        },
        named);
  });
  cs.emplace_back("two_block_stack", [](std::uint64_t seed) {
    const auto cfg = tiny_stb();
    CounterRng rng(seed, "gradcheck.init");
    const auto b0 = ffe::BlockParams::init(cfg, rng), b1 = ffe::BlockParams::init(cfg, rng);
    NamedTensors named;
    b0.collect(named, "b0");
    b1.collect(named, "b1");
    randomize(named, seed, 0.5);
    const Tensor x = random_leaf({2, 4, 6, 4}, seed, 0, -1, 1);
    named.emplace_back("x", x);
    return gradcheck(
        [&] { return random_projection(ffe::stb_block(ffe::stb_block(x, cfg, b0, 0), cfg, b1, 1), seed); },
        named);
  });
  cs.emplace_back("extract_semantic", [](std::uint64_t seed) {
    const auto cfg = tiny_stb();
    CounterRng rng(seed, "gradcheck.init");
    const auto p = ffe::FfeParams::init(cfg, rng);
    NamedTensors named;
    p.collect(named);
    randomize(named, seed, 0.5);
    const Tensor f = random_leaf({1, 3, 5, 6}, seed, 0, -1, 1);
    named.emplace_back("f_up", f);
    return gradcheck(
        [&] {
          const auto out = ffe::extract_semantic(f, cfg, p);
          return ops::add(random_projection(out.semantic, seed), random_projection(out.spatial[0], seed + 1));
        },
        named);
  });
  return cs;
}

toygen::ToygenConfig tiny_gen() {
  toygen::ToygenConfig cfg;
  cfg.semantic_channels = 3;
  cfg.skip_channels = 2;
  cfg.latent_dim = 3;
  cfg.mapping_hidden = 4;
  cfg.channels = 3;
  cfg.stages = 2;
  cfg.start_size = 2;
  return cfg;
}

std::vector<std::pair<std::string, Runner>> toygen_cases() {
  std::vector<std::pair<std::string, Runner>> cs;
  cs.emplace_back("map_latent_decode", [](std::uint64_t seed) {
    const auto cfg = tiny_gen();
    CounterRng rng(seed, "gradcheck.init");
    const auto p = toygen::ToygenParams::init(cfg, rng);
    NamedTensors named;
    p.collect(named);
    randomize(named, seed, 0.7);
    const Tensor f = random_leaf({2, 3, 2, 2}, seed, 0, -1, 1);
    const Tensor s0 = random_leaf({2, 2, 4, 6}, seed, 1, -1, 1);
    const Tensor s1 = random_leaf({2, 2, 8, 12}, seed, 2, -1, 1);
    named.emplace_back("f", f);
    named.emplace_back("skip0", s0);
    named.emplace_back("skip1", s1);
    return gradcheck(
        [&] { return random_projection(toygen::decode(toygen::map_latent(f, cfg, p), {s0, s1}, cfg, p), seed); },
        named);
  });
  return cs;
}

NetConfig tiny_net() {
  NetConfig cfg;
  cfg.channels = 4;
  cfg.ffup.hidden = 6;
  cfg.ffe = tiny_stb();
  cfg.ffe.depths = {1, 1};
  cfg.ffe.pos_size = 4;
  cfg.gen.latent_dim = 3;
  cfg.gen.mapping_hidden = 4;
  cfg.gen.channels = 3;
  cfg.gen.start_size = 2;
  cfg.link();
  return cfg;
}

std::vector<std::pair<std::string, Runner>> net_cases() {
  std::vector<std::pair<std::string, Runner>> cs;
  cs.emplace_back("ffup_ffe_toygen", [](std::uint64_t seed) {
    const NetConfig cfg = tiny_net();
    const NetParams p = NetParams::init(cfg, seed);
    NamedTensors named = p.named();
    randomize(named, seed, 0.4);
    const Tensor lq = random_leaf({1, 3, 3, 4}, seed, 0, 0, 1);
    named.emplace_back("lq", lq);
    return gradcheck(
        [&] {
          const NetOutput out = forward(lq, {1.5, 1.4}, cfg, p);
          return ops::add(random_projection(out.y_hat, seed), random_projection(out.y_up, seed + 1));
        },
        named);
  });
  return cs;
}

std::vector<std::pair<std::string, Runner>> cases_for(const std::string& module) {
  if (module == "numerics") {
    std::vector<std::pair<std::string, Runner>> out;
    for (auto& c : primitive_cases()) {
      out.emplace_back(c.name, [c](std::uint64_t seed) { return check_case(c, seed); });
    }
    return out;
  }
  if (module == "ffup") return ffup_cases();
  if (module == "ffe") return ffe_cases();
  if (module == "toygen") return toygen_cases();
  if (module == "net") return net_cases();
  if (module == "negative-control") {
    Case c{"corrupted_square", {{6}}, [](const Leaves& t) { return corrupted_square(t[0]); }};
    return {{c.name, [c](std::uint64_t seed) { return check_case(c, seed); }}};
  }
  throw UsageError("unknown gradcheck selector '" + module + "'");
}

}  // namespace

std::vector<std::string> gradcheck_modules() {
  return {"numerics", "ffup", "ffe", "toygen", "net", "negative-control"};
}

std::vector<SuiteResult> run_gradcheck_suite(const std::string& selector, std::uint64_t first_seed,
                                             std::size_t seeds,
                                             const std::function<void(const SuiteResult&)>& on_result) {
  std::vector<std::string> modules;
  if (selector == "all") {
    modules = {"numerics", "ffup", "ffe", "toygen", "net"};
  } else {
    cases_for(selector);  // validates the selector
    modules = {selector};
  }
  std::vector<SuiteResult> results;
  for (const auto& module : modules) {
    for (const auto& [name, run] : cases_for(module)) {
      for (std::uint64_t s = first_seed; s < first_seed + seeds; ++s) {
        SuiteResult r{module, name, s, run(s)};
        if (on_result) on_result(r);
        results.push_back(std::move(r));
      }
    }
  }
  return results;
}

}  // namespace scaleform
