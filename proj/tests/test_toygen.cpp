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

#include "doctest.h"
#include "scaleform/errors.hpp"
#include "scaleform/gradcheck.hpp"
#include "scaleform/ops.hpp"
#include "scaleform/sampling.hpp"
#include "scaleform/toygen.hpp"
#include "test_util.hpp"

using namespace scaleform;
using namespace scaleform::toygen;
using scaleform::testing::bit_equal;
using scaleform::testing::random_tensor;

namespace {

ToygenConfig tiny_config() {
  ToygenConfig cfg;
  cfg.semantic_channels = 3;
  cfg.skip_channels = 2;
  cfg.latent_dim = 3;
  cfg.mapping_hidden = 4;
  cfg.channels = 3;
  cfg.stages = 2;
  cfg.start_size = 2;
  return cfg;
}

std::vector<Tensor> zero_skips(std::size_t n, std::size_t c, std::size_t base, std::size_t stages) {
  std::vector<Tensor> skips;
  for (std::size_t i = 0; i < stages; ++i) {
    const std::size_t s = base << (i + 1);
    skips.push_back(Tensor::zeros({n, c, s, s}));
  }
  return skips;
}

}  // namespace

TEST_CASE("zero semantic features give zero codes") {
  ToygenConfig cfg;
  CounterRng rng(1, "init");
  ToygenParams p = ToygenParams::init(cfg, rng);
  p.zero_mapping_bias();
  const LatentCode code = map_latent(Tensor::zeros({2, cfg.semantic_channels, 4, 4}), cfg, p);
  REQUIRE(code.codes.size() == cfg.stages);
  for (const Tensor& c : code.codes) {
    CHECK(c.shape() == Shape{2, cfg.latent_dim});
    for (double v : c.data()) CHECK(v == 0.0);
  }
}

TEST_CASE("map_latent pools globally") {
  const ToygenConfig cfg = tiny_config();
  CounterRng rng(2, "init");
  const ToygenParams p = ToygenParams::init(cfg, rng);
  const Tensor f = random_tensor({1, 3, 4, 4}, 3);
  // Any rearrangement of pixels leaves the pooled input, hence the codes, unchanged.
  std::vector<double> flipped(f.data().begin(), f.data().end());
  for (std::size_t c = 0; c < 3; ++c) std::reverse(flipped.begin() + c * 16, flipped.begin() + (c + 1) * 16);
  const LatentCode a = map_latent(f, cfg, p);
  const LatentCode b = map_latent(Tensor(f.shape(), flipped), cfg, p);
  for (std::size_t i = 0; i < a.codes.size(); ++i)
    for (std::size_t k = 0; k < a.codes[i].numel(); ++k)
      CHECK(a.codes[i].data()[k] == doctest::Approx(b.codes[i].data()[k]).epsilon(1e-14));
}

TEST_CASE("map_latent gradients match finite differences") {
  const ToygenConfig cfg = tiny_config();
  for (int seed = 0; seed < 10; ++seed) {
    CounterRng rng(seed, "init");
    ToygenParams p = ToygenParams::init(cfg, rng);
    Tensor f = random_tensor({2, 3, 3, 2}, 10 + seed, -1, 1, true);
    const NamedTensors named{{"fc1.weight", p.fc1_weight}, {"fc1.bias", p.fc1_bias},
                             {"fc2.weight", p.fc2_weight}, {"fc2.bias", p.fc2_bias},
                             {"f", f}};
    const auto report = gradcheck(
        [&] {
          const LatentCode c = map_latent(f, cfg, p);
          return ops::add(random_projection(c.codes[0], seed), random_projection(c.codes[1], seed + 7));
        },
        named);
    INFO(report.summary());
    CHECK(report.passed());
  }
}

TEST_CASE("four stages take 4x4 to 64x64") {
  ToygenConfig cfg;
  cfg.skip_channels = 5;
  CounterRng rng(4, "init");
  const ToygenParams p = ToygenParams::init(cfg, rng);
  LatentCode zero;
  for (std::size_t i = 0; i < 4; ++i) zero.codes.push_back(Tensor::zeros({1, cfg.latent_dim}));
  const Tensor out = decode(zero, zero_skips(1, 5, 4, 4), cfg, p);
  CHECK(out.shape() == Shape{1, 3, 64, 64});
  for (double v : out.data()) {
    CHECK(std::isfinite(v));
    CHECK(std::fabs(v) <= 1.0);
  }
}

TEST_CASE("zero latent and zero skips reduce to a plain convolutional decode") {
  ToygenConfig cfg = tiny_config();
  CounterRng rng(5, "init");
  const ToygenParams p = ToygenParams::init(cfg, rng);
  LatentCode zero;
  for (std::size_t i = 0; i < cfg.stages; ++i) zero.codes.push_back(Tensor::zeros({1, cfg.latent_dim}));
  const Tensor out = decode(zero, zero_skips(1, cfg.skip_channels, 2, cfg.stages), cfg, p);

  Tensor x = p.constant;
  for (const StageParams& s : p.stages) {
    x = ops::gelu(ops::conv2d(upsample_nearest2x(x), s.conv_weight, s.conv_bias, 1, 1));
  }
  const Tensor plain = ops::tanh(ops::conv2d(x, p.rgb_weight, p.rgb_bias, 1, 0));
  CHECK(bit_equal(out, plain));
}

TEST_CASE("skip resolution mismatch is a dimension error") {
  const ToygenConfig cfg = tiny_config();
  CounterRng rng(6, "init");
  const ToygenParams p = ToygenParams::init(cfg, rng);
  LatentCode zero;
  for (std::size_t i = 0; i < cfg.stages; ++i) zero.codes.push_back(Tensor::zeros({1, cfg.latent_dim}));
  std::vector<Tensor> skips = zero_skips(1, cfg.skip_channels, 2, cfg.stages);
  skips[1] = Tensor::zeros({1, cfg.skip_channels, 6, 8});
  CHECK_THROWS_AS(decode(zero, skips, cfg, p), DimensionError);
  skips.pop_back();
  CHECK_THROWS_AS(decode(zero, skips, cfg, p), DimensionError);
}

TEST_CASE("batch elements decode independently") {
  const ToygenConfig cfg = tiny_config();
  CounterRng rng(7, "init");
  const ToygenParams p = ToygenParams::init(cfg, rng);
  const Tensor f = random_tensor({2, 3, 2, 2}, 8);
  std::vector<Tensor> skips{random_tensor({2, 2, 4, 4}, 9), random_tensor({2, 2, 8, 8}, 10)};
  const Tensor both = decode(map_latent(f, cfg, p), skips, cfg, p);
  for (std::size_t n = 0; n < 2; ++n) {
    std::vector<Tensor> one;
    for (const Tensor& s : skips) one.push_back(ops::slice(s, 0, n, 1));
    const Tensor single = decode(map_latent(ops::slice(f, 0, n, 1), cfg, p), one, cfg, p);
    CHECK(bit_equal(single, ops::slice(both, 0, n, 1)));
  }
}

TEST_CASE("decode gradients match finite differences") {
  const ToygenConfig cfg = tiny_config();
  for (int seed = 0; seed < 10; ++seed) {
    CounterRng rng(seed, "init");
    ToygenParams p = ToygenParams::init(cfg, rng);
    NamedTensors named;
    p.collect(named);
    int k = 0;
    for (auto& [name, t] : named) {
      const Tensor r = random_tensor(t.shape(), seed * 100 + k++, -0.7, 0.7);
      std::ranges::copy(r.data(), t.mutable_data().begin());
    }
    Tensor f = random_tensor({2, 3, 2, 2}, 20 + seed, -1, 1, true);
    Tensor s0 = random_tensor({2, 2, 4, 6}, 30 + seed, -1, 1, true);
    Tensor s1 = random_tensor({2, 2, 8, 12}, 40 + seed, -1, 1, true);
    named.emplace_back("f", f);
    named.emplace_back("skip0", s0);
    named.emplace_back("skip1", s1);
    const auto report = gradcheck(
        [&] { return random_projection(decode(map_latent(f, cfg, p), {s0, s1}, cfg, p), seed); },
        named);
    INFO(report.summary());
    CHECK(report.passed());
  }
}
