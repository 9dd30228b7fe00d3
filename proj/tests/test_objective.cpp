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

#include "doctest.h"
#include "scaleform/degrade.hpp"
#include "scaleform/errors.hpp"
#include "scaleform/gradcheck.hpp"
#include "scaleform/objective.hpp"
#include "scaleform/ops.hpp"
#include "scaleform/sampling.hpp"
#include "test_util.hpp"

using namespace scaleform;
using namespace scaleform::objective;
using scaleform::testing::random_tensor;

namespace {

Tensor shifted(const Tensor& t, double by) {
  std::vector<double> v(t.data().begin(), t.data().end());
  for (double& x : v) x += by;
  return Tensor(t.shape(), v);
}

}  // namespace

TEST_CASE("l1 values") {
  const Tensor a = random_tensor({2, 3, 4, 5}, 1);
  CHECK(l1(a, a).item() == 0.0);
  CHECK(l1(shifted(a, 0.5), a).item() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(l1(a, random_tensor({2, 3, 5, 4}, 2)), DimensionError);
}

TEST_CASE("l1 gradient is sign over N and zero at ties") {
  Tensor a = random_tensor({3, 4}, 3, -1, 1, true);
  std::vector<double> bv(a.data().begin(), a.data().end());
  bv[0] += 0.25;
  bv[1] -= 0.25;
  const Tensor b(a.shape(), bv);
  backward(l1(a, b));
  CHECK(a.grad().data()[0] == -1.0 / 12);
  CHECK(a.grad().data()[1] == 1.0 / 12);
  for (std::size_t i = 2; i < 12; ++i) CHECK(a.grad().data()[i] == 0.0);
}

TEST_CASE("l1 gradient matches finite differences away from kinks") {
  for (int seed = 0; seed < 10; ++seed) {
    Tensor a = random_tensor({2, 3, 3}, 10 + seed, 0, 1, true);
    const Tensor b = random_tensor({2, 3, 3}, 20 + seed, 0, 1);
    const auto report = gradcheck([&] { return l1(a, b); }, {{"a", a}});
    INFO(report.summary());
    CHECK(report.passed());
  }
}

TEST_CASE("perfect restoration costs nothing") {
  const Tensor y = random_tensor({1, 3, 8, 8}, 4, 0, 1);
  const LossReport r = total_loss(y, y, y);
  CHECK(r.l_up == 0.0);
  CHECK(r.l_rec == 0.0);
  CHECK(r.l_rest == 0.0);
  CHECK(r.l_total == 0.0);
}

TEST_CASE("default weights compose as declared") {
  const LossWeights w;
  CHECK(w.lambda1 == 0.01);
  CHECK(w.lambda2 == 0.1);
  CHECK(w.rec == 0.1);
  CHECK(w.adv == 0.1);
  CHECK(w.comp == 0.1);
  CHECK(w.id == 1.0);
  for (int seed = 0; seed < 5; ++seed) {
    const Tensor y = random_tensor({2, 3, 8, 8}, 30 + seed, 0, 1);
    const Tensor y_up = random_tensor({2, 3, 8, 8}, 40 + seed, 0, 1);
    const Tensor y_hat = random_tensor({2, 3, 8, 8}, 50 + seed, 0, 1);
    const LossReport r = total_loss(y_up, y_hat, y);
    CHECK(r.l_up == doctest::Approx(l1(y_up, y).item()).epsilon(1e-15));
    CHECK(r.l_rest == doctest::Approx(0.1 * r.l_rec).epsilon(1e-15));
    CHECK(r.l_total == doctest::Approx(0.01 * r.l_up + 0.1 * r.l_rest).epsilon(1e-15));
    CHECK(r.l_adv == 0.0);
    CHECK(r.l_comp == 0.0);
    CHECK(r.l_id == 0.0);
  }
}

TEST_CASE("the upsampling target is resized ground truth") {
  const Tensor y = random_tensor({1, 3, 12, 12}, 5, 0, 1);
  const Tensor y_up = Tensor::full({1, 3, 6, 6}, 0.5);
  const LossReport r = total_loss(y_up, y, y);
  NoGradGuard guard;
  CHECK(r.l_up == doctest::Approx(l1(y_up, resize_bilinear(y, 6, 6)).item()).epsilon(1e-15));
}

TEST_CASE("total loss is linear in each plugin term") {
  const Tensor y = random_tensor({1, 3, 8, 8}, 6, 0, 1);
  const Tensor y_hat = random_tensor({1, 3, 8, 8}, 7, 0, 1);
  const double base = total_loss(y_hat, y_hat, y).l_total;
  const LossWeights w;
  for (int which = 0; which < 3; ++which) {
    const double weight = which == 0 ? w.adv : which == 1 ? w.comp : w.id;
    for (double k : {0.5, 1.0, 2.0, 4.0}) {
      LossPlugins p;
      const LossPlugin plug = [k](const Tensor&, const Tensor&) { return Tensor::scalar(0.3 * k); };
      (which == 0 ? p.adv : which == 1 ? p.comp : p.id) = plug;
      const LossReport r = total_loss(y_hat, y_hat, y, w, p);
      CHECK(r.l_total - base == doctest::Approx(w.lambda2 * weight * 0.3 * k).epsilon(1e-12));
    }
  }
}

TEST_CASE("total loss gradients match finite differences") {
  for (int seed = 0; seed < 10; ++seed) {
    Tensor y_up = random_tensor({1, 3, 4, 4}, 60 + seed, 0, 1, true);
    Tensor y_hat = random_tensor({1, 3, 4, 4}, 70 + seed, 0, 1, true);
    const Tensor y = random_tensor({1, 3, 4, 4}, 80 + seed, 0, 1);
    LossPlugins p;
    p.adv = [](const Tensor& a, const Tensor&) { return ops::mean(ops::square(a)); };
    const auto report = gradcheck([&] { return total_loss(y_up, y_hat, y, {}, p).total; },
                                  {{"y_up", y_up}, {"y_hat", y_hat}});
    INFO(report.summary());
    CHECK(report.passed());
  }
}

TEST_CASE("negative weights are rejected") {
  LossWeights w;
  w.adv = -0.1;
  CHECK_THROWS_AS(w.validate(), ConfigError);
}

TEST_CASE("psnr closed forms") {
  const Tensor a = random_tensor({3, 16, 16}, 8, 0.1, 0.9);
  CHECK(psnr(a, a) == 99.0);
  const Tensor b = shifted(a, 1.0 / 255.0);
  CHECK(psnr(a, b) == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-12));
  CHECK(std::fabs(psnr(a, b) - 48.13) < 0.005);
  const Tensor c = random_tensor({3, 16, 16}, 9, 0, 1);
  CHECK(psnr(a, c) == psnr(c, a));
  CHECK(psnr(a, b, 255.0) == doctest::Approx(20.0 * std::log10(255.0 * 255.0)).epsilon(1e-12));
}

TEST_CASE("psnr decreases with the noise level") {
  const Tensor img = random_tensor({3, 64, 64}, 10, 0.3, 0.7);
  const double p1 = psnr(degrade::awgn(img, 1.0, 3), img);
  const double p5 = psnr(degrade::awgn(img, 5.0, 3), img);
  const double p15 = psnr(degrade::awgn(img, 15.0, 3), img);
  CHECK(p1 > p5);
  CHECK(p5 > p15);
}

TEST_CASE("ssim identities") {
  const Tensor a = random_tensor({3, 20, 24}, 11, 0, 1);
  const Tensor b = random_tensor({3, 20, 24}, 12, 0, 1);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ssim(a, b) == ssim(b, a));
  CHECK(ssim(a, b) < 1.0 - 1e-9);
  std::vector<double> nudged(a.data().begin(), a.data().end());
  nudged[100] += 0.05;
  CHECK(ssim(a, Tensor(a.shape(), nudged)) < 1.0 - 1e-9);
  CHECK_THROWS_AS(ssim(Tensor::zeros({3, 10, 20}), Tensor::zeros({3, 10, 20})), RangeError);
}

TEST_CASE("ssim of two constants has a closed form") {
  const double c1 = 1e-4;
  for (double c : {0.0, 0.2, 0.5, 0.85}) {
    const Tensor a = Tensor::full({1, 16, 16}, c);
    const Tensor b = Tensor::full({1, 16, 16}, c + 0.1);
    const double expect = (2 * c * (c + 0.1) + c1) / (c * c + (c + 0.1) * (c + 0.1) + c1);
    CHECK(ssim(a, b) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("ssim stays within [-1, 1]") {
  for (int seed = 0; seed < 20; ++seed) {
    const Tensor a = random_tensor({2, 3, 14, 13}, 100 + seed, 0, 1);
    const Tensor b = random_tensor({2, 3, 14, 13}, 200 + seed, 0, 1);
    const double s = ssim(a, b);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
    // An inverted image is anti-correlated.
    std::vector<double> inv(a.data().begin(), a.data().end());
    for (double& v : inv) v = 1.0 - v;
    const double t = ssim(a, Tensor(a.shape(), inv));
    CHECK(t >= -1.0);
    CHECK(t < 0.0);
  }
}
