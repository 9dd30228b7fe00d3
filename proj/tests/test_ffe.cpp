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


#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "scaleform/errors.hpp"
#include "scaleform/ffe.hpp"
#include "scaleform/gradcheck.hpp"
#include "scaleform/ops.hpp"
#include "test_util.hpp"

using namespace scaleform;
using namespace scaleform::ffe;
using scaleform::testing::bit_equal;
using scaleform::testing::random_tensor;

namespace {

void randomize(NamedTensors& named, int seed, double bound = 0.5) {
  int k = 0;
  for (auto& [name, t] : named) {
    const Tensor r = random_tensor(t.shape(), seed * 1000 + k++, -bound, bound);
    std::ranges::copy(r.data(), t.mutable_data().begin());
  }
}

StbConfig tiny_config() {
  StbConfig cfg;
  cfg.depths = {2, 1};
  cfg.in_channels = 3;
  cfg.dim = 4;
  cfg.heads = 2;
  cfg.window = 2;
  cfg.out_channels = 3;
  cfg.pos_size = 4;
  return cfg;
}

Tensor eye(std::size_t n) {
  Tensor t = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.mutable_data()[i * n + i] = 1.0;
  return t;
}

}  // namespace

TEST_CASE("window counting") {
  const Tensor x = random_tensor({1, 3, 8, 8}, 1);
  const WindowSet w = window_partition(x, 4);
  CHECK(w.windows.shape() == Shape{4, 16, 3});
  CHECK(w.windows_per_image() == 4);
}

TEST_CASE("unshifted windows hold the expected pixels") {
  const Tensor x = random_tensor({2, 3, 8, 12}, 2);
  const WindowSet w = window_partition(x, 4);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t wy = 0; wy < 2; ++wy)
      for (std::size_t wx = 0; wx < 3; ++wx)
        for (std::size_t ty = 0; ty < 4; ++ty)
          for (std::size_t tx = 0; tx < 4; ++tx)
            for (std::size_t c = 0; c < 3; ++c)
              CHECK(w.windows.at({n * 6 + wy * 3 + wx, ty * 4 + tx, c}) ==
                    x.at({n, c, wy * 4 + ty, wx * 4 + tx}));
}

TEST_CASE("shifted windows read the cyclically rolled map") {
  const Tensor x = random_tensor({1, 2, 8, 8}, 3);
  const WindowSet w = window_partition(x, 4, 2);
  for (std::size_t wi = 0; wi < 4; ++wi)
    for (std::size_t t = 0; t < 16; ++t) {
      const std::size_t y = ((wi / 2) * 4 + t / 4 + 2) % 8;
      const std::size_t xx = ((wi % 2) * 4 + t % 4 + 2) % 8;
      CHECK(w.windows.at({wi, t, 1}) == x.at({0, 1, y, xx}));
    }
}

TEST_CASE("partition then reverse is the identity") {
  for (int seed = 0; seed < 10; ++seed) {
    const std::size_t h = 5 + seed % 4, wd = 6 + seed % 5;
    const Tensor nchw = random_tensor({2, 3, h, wd}, 10 + seed);
    const Tensor nhwc = random_tensor({2, h, wd, 3}, 20 + seed);
    for (std::size_t shift : {0, 1, 2}) {
      CHECK(bit_equal(window_reverse(window_partition(nchw, 4, shift)), nchw));
      CHECK(bit_equal(window_reverse(window_partition(nhwc, 4, shift, Layout::kNHWC)), nhwc));
    }
  }
}

TEST_CASE("padding reflects at the border") {
  const Tensor x = random_tensor({1, 1, 3, 3}, 4);
  const WindowSet w = window_partition(x, 4);
  CHECK(w.windows.shape() == Shape{1, 16, 1});
  // Padded row 3 mirrors row 1, padded column 3 mirrors column 1.
  CHECK(w.windows.at({0, 3 * 4 + 0, 0}) == x.at({0, 0, 1, 0}));
  CHECK(w.windows.at({0, 0 * 4 + 3, 0}) == x.at({0, 0, 0, 1}));
  CHECK(w.windows.at({0, 3 * 4 + 3, 0}) == x.at({0, 0, 1, 1}));
}

TEST_CASE("constant input gives constant windows") {
  const Tensor x = Tensor::full({1, 2, 7, 9}, 0.375);
  const WindowSet w = window_partition(x, 4, 2);
  for (double v : w.windows.data()) CHECK(v == 0.375);
}

TEST_CASE("zero query/key with identity value gives the window mean") {
  const std::size_t c = 4;
  CounterRng rng(1, "init");
  AttentionParams p = init_attention(c, 2, 2, rng);
  std::ranges::fill(p.qkv_weight.mutable_data(), 0.0);
  for (std::size_t i = 0; i < c; ++i) p.qkv_weight.mutable_data()[i * 3 * c + 2 * c + i] = 1.0;
  std::ranges::fill(p.rel_bias.mutable_data(), 0.0);
  p.proj_weight = eye(c);
  const Tensor x = random_tensor({1, 4, 4, c}, 5);
  const WindowSet w = window_partition(x, 2, 0, Layout::kNHWC);
  const WindowSet out = window_attention(w, p, 2);
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      double m = 0;
      for (std::size_t t = 0; t < 4; ++t) m += w.windows.at({b, t, ch});
      m /= 4;
      for (std::size_t t = 0; t < 4; ++t) CHECK(out.windows.at({b, t, ch}) == doctest::Approx(m).epsilon(1e-14));
    }
}

TEST_CASE("single-token windows reduce to the value projection") {
  const std::size_t c = 4;
  CounterRng rng(2, "init");
  AttentionParams p = init_attention(c, 2, 1, rng);
  const Tensor x = random_tensor({1, 3, 3, c}, 6);
  const WindowSet w = window_partition(x, 1, 0, Layout::kNHWC);
  const WindowSet out = window_attention(w, p, 2);
  const Tensor wv = ops::slice(p.qkv_weight, 1, 2 * c, c);
  const Tensor bv = ops::slice(p.qkv_bias, 0, 2 * c, c);
  const Tensor expect =
      ops::linear(ops::linear(w.windows, wv, bv), p.proj_weight, p.proj_bias);
  for (std::size_t i = 0; i < expect.numel(); ++i)
    CHECK(out.windows.data()[i] == doctest::Approx(expect.data()[i]).epsilon(1e-13));
}

TEST_CASE("attention rows are stochastic and masked pairs get zero weight") {
  for (int seed = 0; seed < 10; ++seed) {
    CounterRng rng(seed, "init");
    AttentionParams p = init_attention(4, 2, 4, rng);
    const Tensor x = random_tensor({2, 12, 8, 4}, 30 + seed, -3, 3);
    const WindowSet w = window_partition(x, 4, 2, Layout::kNHWC);
    AttentionTrace trace;
    window_attention(w, p, 2, &trace);
    const std::size_t t_count = 16, nw = w.windows_per_image();
    REQUIRE(trace.weights.shape() == Shape{2 * nw, 2, t_count, t_count});
    std::size_t masked = 0;
    for (std::size_t b = 0; b < 2 * nw; ++b) {
      const std::size_t wi = b % nw;
      for (std::size_t h = 0; h < 2; ++h)
        for (std::size_t i = 0; i < t_count; ++i) {
          double row = 0;
          for (std::size_t j = 0; j < t_count; ++j) {
            const double a = trace.weights.at({b, h, i, j});
            row += a;
            // Source coordinates in the unrolled map; pairs that only meet
            // because of the wrap are far apart there.
            auto src = [&](std::size_t t, bool vertical) {
              const std::size_t base = vertical ? (wi / 2) * 4 + t / 4 : (wi % 2) * 4 + t % 4;
              return long((base + 2) % (vertical ? 12 : 8));
            };
            const bool near = std::labs(src(i, true) - src(j, true)) < 4 &&
                              std::labs(src(i, false) - src(j, false)) < 4;
            if (!near) {
              ++masked;
              CHECK(a == 0.0);
            } else {
              CHECK(a > 0.0);
            }
          }
          CHECK(std::fabs(row - 1.0) <= 1e-12);
        }
    }
    CHECK(masked > 0);
  }
}

TEST_CASE("unshifted windows are unmasked") {
  CounterRng rng(3, "init");
  AttentionParams p = init_attention(4, 2, 4, rng);
  const WindowSet w = window_partition(random_tensor({1, 8, 8, 4}, 7), 4, 0, Layout::kNHWC);
  AttentionTrace trace;
  window_attention(w, p, 2, &trace);
  CHECK(trace.keep.empty());
  for (double a : trace.weights.data()) CHECK(a > 0.0);
}

TEST_CASE("zeroed output projections make every block the identity") {
  StbConfig cfg;
  cfg.dim = 8;
  CounterRng rng(4, "init");
  for (std::size_t j = 0; j < 4; ++j) {
    BlockParams p = BlockParams::init(cfg, rng);
    p.zero_residual_branches();
    const Tensor x = random_tensor({2, 8, 12, 8}, 40 + int(j));
    const Tensor y = stb_block(x, cfg, p, j);
    CHECK(y.shape() == x.shape());
    CHECK(bit_equal(y, x));
  }
}

TEST_CASE("two-block stack gradients match finite differences") {
  const StbConfig cfg = tiny_config();
  for (int seed = 0; seed < 10; ++seed) {
    CounterRng rng(seed, "init");
    BlockParams b0 = BlockParams::init(cfg, rng), b1 = BlockParams::init(cfg, rng);
    NamedTensors named;
    b0.collect(named, "b0");
    b1.collect(named, "b1");
    randomize(named, seed);
    Tensor x = random_tensor({2, 4, 6, 4}, 50 + seed, -1, 1, true);
    named.emplace_back("x", x);
    const auto report = gradcheck(
        [&] {
          AttentionTrace trace;
          const Tensor y = stb_block(stb_block(x, cfg, b0, 0), cfg, b1, 1, &trace);
          CHECK(!trace.keep.empty());
          return random_projection(y, seed);
        },
        named);
    INFO(report.summary());
    CHECK(report.passed());
  }
}

TEST_CASE("extract_semantic shape contract on the toy default") {
  StbConfig cfg;
  cfg.in_channels = 16;
  CounterRng rng(5, "init");
  const FfeParams p = FfeParams::init(cfg, rng);
  const Tensor f = random_tensor({1, 16, 32, 32}, 8);
  const SemanticFeatures out = extract_semantic(f, cfg, p);
  CHECK(out.semantic.shape() == Shape{1, cfg.out_channels, 4, 4});
  REQUIRE(out.spatial.size() == 4);
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(out.spatial[s].shape() == Shape{1, cfg.dim, std::size_t(32) >> s, std::size_t(32) >> s});
  }
  const SemanticFeatures again = extract_semantic(f, cfg, p);
  CHECK(bit_equal(out.semantic, again.semantic));
  for (std::size_t s = 0; s < 4; ++s) CHECK(bit_equal(out.spatial[s], again.spatial[s]));
}

TEST_CASE("parameter names follow the stage/block convention") {
  const StbConfig cfg = tiny_config();
  CounterRng rng(6, "init");
  NamedTensors named;
  FfeParams::init(cfg, rng).collect(named);
  auto has = [&](const std::string& n) {
    return std::ranges::any_of(named, [&](const auto& p) { return p.first == n; });
  };
  CHECK(has("ffe.stage0.block0.attn.qkv.weight"));
  CHECK(has("ffe.stage0.block1.mlp.fc2.bias"));
  CHECK(has("ffe.stage1.block0.attn.rel_bias"));
  CHECK(has("ffe.stage1.down.weight"));
  CHECK_FALSE(has("ffe.stage0.down.weight"));
}

TEST_CASE("stages smaller than the window are rejected") {
  StbConfig cfg;
  cfg.in_channels = 4;
  CounterRng rng(7, "init");
  const FfeParams p = FfeParams::init(cfg, rng);
  CHECK_THROWS_AS(extract_semantic(random_tensor({1, 4, 16, 32}, 9), cfg, p), ConfigError);
  cfg.heads = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("batch elements never mix") {
  StbConfig cfg = tiny_config();
  cfg.depths = {2, 2};
  CounterRng rng(8, "init");
  FfeParams p = FfeParams::init(cfg, rng);
  const Tensor f = random_tensor({3, 3, 8, 6}, 10);
  const std::size_t per = 3 * 8 * 6;
  std::vector<double> permuted;
  for (std::size_t n : {2, 0, 1})
    permuted.insert(permuted.end(), f.data().begin() + n * per, f.data().begin() + (n + 1) * per);
  const SemanticFeatures a = extract_semantic(f, cfg, p);
  const SemanticFeatures b = extract_semantic(Tensor(f.shape(), permuted), cfg, p);
  const std::size_t sem = a.semantic.numel() / 3;
  const std::size_t order[3] = {2, 0, 1};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < sem; ++k)
      CHECK(b.semantic.data()[i * sem + k] == a.semantic.data()[order[i] * sem + k]);
}

TEST_CASE("full embedding gradients match finite differences") {
  const StbConfig cfg = tiny_config();
  for (int seed = 0; seed < 10; ++seed) {
    CounterRng rng(seed, "init");
    FfeParams p = FfeParams::init(cfg, rng);
    NamedTensors named;
    p.collect(named);
    randomize(named, seed);
    Tensor f = random_tensor({1, 3, 5, 6}, 60 + seed, -1, 1, true);
    named.emplace_back("f_up", f);
    const auto report = gradcheck(
        [&] {
          const SemanticFeatures out = extract_semantic(f, cfg, p);
          return ops::add(random_projection(out.semantic, seed),
                          random_projection(out.spatial[0], seed + 1));
        },
        named);
    INFO(report.summary());
    CHECK(report.passed());
  }
}
