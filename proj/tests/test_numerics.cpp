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

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "scaleform/errors.hpp"
#include "scaleform/ftns.hpp"
#include "scaleform/gradcheck.hpp"
#include "scaleform/ops.hpp"
#include "scaleform/rng.hpp"
#include "scaleform/sampling.hpp"
#include "test_util.hpp"

using namespace scaleform;
using scaleform::testing::bit_equal;
using scaleform::testing::random_tensor;

namespace {

constexpr int kSeeds = 10;

// Gradcheck of f with respect to freshly drawn leaves of the given shapes.
void check_op(const char* what, std::vector<Shape> shapes,
              const std::function<Tensor(const std::vector<Tensor>&)>& f, double lo = -1.0,
              double hi = 1.0) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::vector<Tensor> leaves;
    NamedTensors named;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      leaves.push_back(random_tensor(shapes[i], 1000 * seed + i, lo, hi, true));
      named.emplace_back("in" + std::to_string(i), leaves.back());
    }
    const auto report = gradcheck(
        [&] { return random_projection(f(leaves), 77 + seed); }, named);
    INFO(what << " seed " << seed << "\n" << report.summary());
    CHECK(report.passed());
  }
}

// Straight quadruple loop: bias first, then channel, kernel row, kernel column.
Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
                  std::size_t pad) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t o = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
  std::vector<double> out(n * o * oh * ow);
  for (std::size_t bi = 0; bi < n; ++bi)
    for (std::size_t oc = 0; oc < o; ++oc)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = b.data()[oc];
          for (std::size_t ic = 0; ic < c; ++ic)
            for (std::size_t ky = 0; ky < kh; ++ky)
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
                const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd))
                  continue;
                acc += w.at({oc, ic, ky, kx}) *
                       x.at({bi, ic, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)});
              }
          out[((bi * o + oc) * oh + oy) * ow + ox] = acc;
        }
  return Tensor({n, o, oh, ow}, out);
}

}  // namespace

TEST_CASE("matmul examples") {
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  const Tensor m({2, 2}, {1, 2, 3, 4});
  CHECK(bit_equal(ops::matmul(eye, m), m));
  const Tensor r = ops::matmul(Tensor({1, 2}, {1, 2}), Tensor({2, 1}, {3, 4}));
  CHECK(r.shape() == Shape{1, 1});
  CHECK(r.item() == 11.0);
  CHECK_THROWS_AS(ops::matmul(m, Tensor({3, 1}, {1, 2, 3})), DimensionError);
}

TEST_CASE("gradient of sum(AB) w.r.t. A is the broadcast column sums of B") {
  Tensor a = random_tensor({3, 4}, 1, -1, 1, true);
  const Tensor b = random_tensor({4, 5}, 2);
  backward(ops::sum(ops::matmul(a, b)));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k) {
      double row = 0.0;
      for (std::size_t j = 0; j < 5; ++j) row += b.at({k, j});
      CHECK(a.grad()[i * 4 + k] == doctest::Approx(row).epsilon(1e-12));
    }
  const auto report = gradcheck([&] { return ops::sum(ops::matmul(a, b)); }, {{"a", a}});
  CHECK(report.max_error <= 1e-6);
}

TEST_CASE("conv2d identity and constant-field kernels") {
  const Tensor x = random_tensor({2, 1, 5, 6}, 3);
  const Tensor one({1, 1, 1, 1}, {1.0});
  CHECK(bit_equal(ops::conv2d(x, one, Tensor({1}, {0.0})), x));

  const double c = 0.37;
  const Tensor flat = Tensor::full({1, 1, 6, 6}, c);
  const Tensor ones = Tensor::full({1, 1, 3, 3}, 1.0);
  const Tensor y = ops::conv2d(flat, ones, {}, 1, 1);
  CHECK(y.shape() == Shape{1, 1, 6, 6});
  for (std::size_t i = 1; i < 5; ++i)
    for (std::size_t j = 1; j < 5; ++j) CHECK(y.at({0, 0, i, j}) == doctest::Approx(9 * c));
  CHECK(y.at({0, 0, 0, 0}) == doctest::Approx(4 * c));
}

TEST_CASE("conv2d matches the naive loop bit-exactly") {
  for (int seed = 0; seed < 10; ++seed) {
    const Tensor x = random_tensor({1, 2, 5, 5}, 10 + seed);
    const Tensor w = random_tensor({3, 2, 3, 3}, 20 + seed);
    const Tensor b = random_tensor({3}, 30 + seed);
    for (auto [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0}, {1, 1}, {2, 1}, {1, 2}}) {
      CHECK(bit_equal(ops::conv2d(x, w, b, stride, pad), naive_conv(x, w, b, stride, pad)));
    }
  }
}

TEST_CASE("conv2d rejects non-integral output sizes") {
  const Tensor x = random_tensor({1, 1, 6, 6}, 1);
  const Tensor w = random_tensor({1, 1, 3, 3}, 2);
  CHECK_THROWS_AS(ops::conv2d(x, w, {}, 2, 0), DimensionError);
  CHECK_THROWS_AS(ops::conv2d(x, random_tensor({1, 2, 3, 3}, 2), {}), DimensionError);
}

TEST_CASE("softmax and layernorm definitions") {
  const Tensor row = Tensor::full({1, 4}, 3.5);
  const Tensor p = ops::softmax(row, -1);
  for (double v : p.data()) CHECK(v == 0.25);

  for (int seed = 0; seed < 5; ++seed) {
    const Tensor x = random_tensor({3, 7, 2}, seed, -20, 20);
    for (int axis : {0, 1, 2}) {
      const Tensor s = ops::sum_axis(ops::softmax(x, axis), axis);
      for (double v : s.data()) CHECK(std::fabs(v - 1.0) <= 1e-12);

      const Tensor y = ops::layernorm(x, axis, 0.0);
      const Tensor mu = ops::mean_axis(y, axis);
      const Tensor var = ops::mean_axis(ops::square(y), axis);
      for (double v : mu.data()) CHECK(std::fabs(v) <= 1e-9);
      for (double v : var.data()) CHECK(std::fabs(v - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("masked softmax gives exact zeros") {
  const Tensor x = random_tensor({2, 3}, 4);
  const std::vector<std::uint8_t> keep{1, 0, 1, 0, 1, 0};
  const Tensor p = ops::softmax(x, -1, keep);
  CHECK(p.at({0, 1}) == 0.0);
  CHECK(p.at({1, 0}) == 0.0);
  CHECK(p.at({1, 1}) == 1.0);
}

TEST_CASE("backward basics") {
  Tensor x = random_tensor({2, 3}, 5, -1, 1, true);
  backward(ops::sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);
  x.zero_grad();
  backward(ops::scale(ops::sum(ops::square(x)), 0.5));
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(x.grad()[i] == doctest::Approx(x.data()[i]));

  // Repeated calls accumulate.
  x.zero_grad();
  const Tensor loss = ops::sum(x);
  backward(loss);
  backward(loss);
  for (double g : x.grad()) CHECK(g == 2.0);

  CHECK_THROWS_AS(backward(ops::scale(x, 2.0)), UsageError);
}

TEST_CASE("shared subexpressions get both gradient contributions") {
  Tensor x = random_tensor({4}, 6, -1, 1, true);
  const Tensor y = ops::mul(x, x);
  backward(ops::sum(ops::add(y, y)));
  for (std::size_t i = 0; i < 4; ++i) CHECK(x.grad()[i] == doctest::Approx(4 * x.data()[i]));
}

TEST_CASE("no-grad mode records nothing") {
  Tensor x = random_tensor({3}, 7, -1, 1, true);
  NoGradGuard guard;
  const Tensor y = ops::relu(x);
  CHECK_FALSE(y.requires_grad());
  CHECK(y.is_leaf());
}

TEST_CASE("non-finite values are an error state") {
  CHECK_THROWS_AS(Tensor({1}, {std::nan("")}), NumericError);
  const Tensor big = Tensor::full({2}, 1e300);
  CHECK_THROWS_AS(ops::mul(big, big), NumericError);
}

TEST_CASE("finite-difference agreement for every primitive") {
  using V = std::vector<Tensor>;
  check_op("matmul", {{3, 4}, {4, 2}}, [](const V& t) { return ops::matmul(t[0], t[1]); });
  check_op("bmm", {{2, 3, 4}, {2, 4, 5}}, [](const V& t) { return ops::bmm(t[0], t[1]); });
  check_op("bmm_t", {{2, 3, 4}, {2, 5, 4}}, [](const V& t) { return ops::bmm(t[0], t[1], true); });
  check_op("linear", {{2, 3, 4}, {4, 5}, {5}},
           [](const V& t) { return ops::linear(t[0], t[1], t[2]); });
  check_op("conv2d", {{2, 2, 5, 5}, {3, 2, 3, 3}, {3}},
           [](const V& t) { return ops::conv2d(t[0], t[1], t[2], 1, 1); });
  check_op("conv2d_stride2", {{1, 2, 5, 5}, {2, 2, 3, 3}, {2}},
           [](const V& t) { return ops::conv2d(t[0], t[1], t[2], 2, 1); });
  check_op("conv2d_1x1", {{2, 3, 4, 4}, {2, 3, 1, 1}, {2}},
           [](const V& t) { return ops::conv2d(t[0], t[1], t[2]); });
  check_op("add_broadcast", {{2, 3, 4}, {3, 1}}, [](const V& t) { return ops::add(t[0], t[1]); });
  check_op("sub_broadcast", {{1, 4}, {3, 1}}, [](const V& t) { return ops::sub(t[0], t[1]); });
  check_op("mul_broadcast", {{2, 3, 4}, {1, 3, 1}}, [](const V& t) { return ops::mul(t[0], t[1]); });
  check_op("mul", {{5}, {5}}, [](const V& t) { return ops::mul(t[0], t[1]); });
  check_op("relu", {{20}}, [](const V& t) { return ops::relu(t[0]); });
  check_op("gelu", {{20}}, [](const V& t) { return ops::gelu(t[0]); }, -3, 3);
  check_op("tanh", {{20}}, [](const V& t) { return ops::tanh(t[0]); }, -3, 3);
  check_op("abs", {{20}}, [](const V& t) { return ops::abs(t[0]); });
  check_op("square", {{20}}, [](const V& t) { return ops::square(t[0]); });
  check_op("scale+shift", {{6}}, [](const V& t) { return ops::add_scalar(ops::scale(t[0], -2.5), 1.0); });
  check_op("mean", {{3, 4}}, [](const V& t) { return ops::scale(ops::mean(t[0]), 3.0); });
  check_op("sum_axis", {{3, 4, 2}}, [](const V& t) { return ops::sum_axis(t[0], 1); });
  check_op("mean_axis", {{3, 4, 2}}, [](const V& t) { return ops::mean_axis(t[0], -1, true); });
  check_op("layernorm", {{3, 5, 2}}, [](const V& t) { return ops::layernorm(t[0], 1); });
  check_op("layernorm_last", {{4, 6}}, [](const V& t) { return ops::layernorm(t[0], -1); });
  check_op("softmax", {{3, 5, 2}}, [](const V& t) { return ops::softmax(t[0], 1); }, -3, 3);
  check_op("softmax_masked", {{2, 3}}, [](const V& t) {
    static const std::vector<std::uint8_t> keep{1, 1, 0, 0, 1, 1};
    return ops::softmax(t[0], -1, keep);
  });
  check_op("reshape", {{2, 6}}, [](const V& t) { return ops::reshape(t[0], {3, 4}); });
  check_op("permute", {{2, 3, 4}}, [](const V& t) { return ops::permute(t[0], {2, 0, 1}); });
  check_op("gather_repeat", {{4}}, [](const V& t) { return ops::gather(t[0], {6}, {0, 0, 3, 2, 3, 1}); });
  check_op("concat", {{2, 3}, {2, 1}}, [](const V& t) { return ops::concat({t[0], t[1]}, 1); });
  check_op("slice", {{4, 5}}, [](const V& t) { return ops::slice(t[0], 1, 1, 3); });
  check_op("resample", {{1, 2, 5, 4}}, [](const V& t) { return resample_bilinear(t[0], 7, 9, 1.4, 2.25); });
  check_op("nearest2x", {{1, 2, 3, 2}}, [](const V& t) { return upsample_nearest2x(t[0]); });
}

TEST_CASE("operations are pure") {
  const Tensor x = random_tensor({1, 3, 6, 6}, 8);
  const Tensor w = random_tensor({4, 3, 3, 3}, 9);
  CHECK(bit_equal(ops::gelu(ops::conv2d(x, w, {}, 1, 1)), ops::gelu(ops::conv2d(x, w, {}, 1, 1))));
  CHECK(bit_equal(ops::softmax(x, 1), ops::softmax(x, 1)));
}

TEST_CASE("permute round trip") {
  const Tensor x = random_tensor({2, 3, 4, 5}, 11);
  const Tensor y = ops::permute(ops::permute(x, {0, 2, 3, 1}), {0, 3, 1, 2});
  CHECK(bit_equal(x, y));
}

TEST_CASE("resample at unit factor is exact and at 2x follows half-pixel centres") {
  const Tensor x = random_tensor({1, 2, 4, 5}, 12);
  CHECK(bit_equal(resample_bilinear(x, 4, 5, 1.0, 1.0), x));
  const Tensor row({1, 2}, {0.0, 1.0});
  const Tensor up = resample_bilinear(row, 1, 4, 1.0, 2.0);
  CHECK(up.data()[0] == 0.0);
  CHECK(up.data()[1] == 0.25);
  CHECK(up.data()[2] == 0.75);
  CHECK(up.data()[3] == 1.0);
  CHECK(scaled_extent(16, 1.5) == 24);
  CHECK(scaled_extent(5, 0.5) == 2);  // 2.5 -> ties to even
  CHECK(scaled_extent(7, 0.5) == 4);  // 3.5 -> 4
}

TEST_CASE("FTNS round trip") {
  const Tensor x = random_tensor({2, 3, 4}, 13);
  std::stringstream ss;
  ftns::write(ss, x);
  const Tensor y = ftns::read(ss);
  CHECK(bit_equal(x, y));

  std::stringstream header;
  ftns::write(header, Tensor({1}, {1.5}));
  const std::string bytes = header.str();
  // magic, version 1, ndim 1, dim 1, dtype 0, then 8 payload bytes
  CHECK(bytes.size() == 4 + 4 + 4 + 8 + 1 + 8);
  CHECK(bytes.substr(0, 4) == "FTNS");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 1);
  CHECK(bytes[20] == 0);

  std::stringstream f32;
  ftns::write(f32, x, ftns::DType::kFloat32);
  const Tensor z = ftns::read(f32);
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK(z.data()[i] == static_cast<double>(static_cast<float>(x.data()[i])));

  std::stringstream bad("FTNX0000");
  CHECK_THROWS_AS(ftns::read(bad), FormatError);
}

TEST_CASE("counter RNG streams") {
  CounterRng a(7, "noise", 3), b(7, "noise", 3), c(7, "noise", 4), d(7, "jitter", 3);
  const auto va = a.next_u64();
  CHECK(va == b.next_u64());
  CHECK(va != c.next_u64());
  CHECK(va != d.next_u64());
  CounterRng u(1, "u");
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = u.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::fabs(s / n) < 0.01);
  CHECK(std::fabs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("float32 inference precision rounds op outputs") {
  const Tensor x = random_tensor({8}, 14);
  NoGradGuard ng;
  PrecisionGuard pg(Precision::kFloat32);
  const Tensor y = ops::scale(x, 1.0 / 3.0);
  for (double v : y.data()) CHECK(v == static_cast<double>(static_cast<float>(v)));
}
