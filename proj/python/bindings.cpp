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


#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "scaleform/checkpoint.hpp"
#include "scaleform/config.hpp"
#include "scaleform/degrade.hpp"
#include "scaleform/errors.hpp"
#include "scaleform/ffup.hpp"
#include "scaleform/gradcheck_suite.hpp"
#include "scaleform/image_io.hpp"
#include "scaleform/objective.hpp"
#include "scaleform/sampling.hpp"
#include "scaleform/synth.hpp"
#include "scaleform/trainer.hpp"

namespace py = pybind11;
using namespace scaleform;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

ffup::ScalePair scale_of(py::object s) {
  if (py::isinstance<py::tuple>(s) || py::isinstance<py::list>(s)) {
    auto seq = s.cast<std::vector<double>>();
    if (seq.size() != 2) throw UsageError("scale must be a number or (horizontal, vertical)");
    return {seq[0], seq[1]};
  }
  return ffup::ScalePair::uniform(s.cast<double>());
}

}  // namespace

PYBIND11_MODULE(_scaleform, m) {
  m.doc() = "Scale-aware face restoration core";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);

  m.def("synth_face", [](std::size_t size, std::uint64_t seed, std::uint64_t index) {
    return to_array(synth::face(size, seed, index));
  }, py::arg("size") = 32, py::arg("seed") = 7, py::arg("index") = 0);

  m.def("build_grid", [](std::size_t h_out, std::size_t w_out, py::object scale) {
    const auto g = ffup::build_grid(h_out, w_out, scale_of(scale));
    auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
    py::dict d;
    d["x_prime"] = vec(g.x_prime());
    d["rx"] = vec(g.rx());
    d["y_prime"] = vec(g.y_prime());
    d["ry"] = vec(g.ry());
    return d;
  }, py::arg("h_out"), py::arg("w_out"), py::arg("scale"));

  m.def("resize_bilinear", [](const Array& x, std::size_t h, std::size_t w) {
    return to_array(resize_bilinear(to_tensor(x), h, w));
  }, py::arg("x"), py::arg("height"), py::arg("width"));

  m.def("degrade", [](const Array& img, double sigma, double r, double delta, double q, std::uint64_t seed) {
    degrade::DegradationSpec spec;
    spec.sigma = sigma;
    spec.r = r;
    spec.delta = delta;
    spec.q = q;
    spec.seed = seed;
    degrade::DegradeOptions options;
    options.jitter = false;
    return to_array(degrade::degrade(to_tensor(img), spec, options).lq);
  }, py::arg("image"), py::arg("sigma") = 0.0, py::arg("r") = 1.0, py::arg("delta") = 0.0,
     py::arg("q") = 100.0, py::arg("seed") = 0);

  m.def("psnr", [](const Array& a, const Array& b, double peak) {
    return objective::psnr(to_tensor(a), to_tensor(b), peak);
  }, py::arg("a"), py::arg("b"), py::arg("peak") = 1.0);
  m.def("ssim", [](const Array& a, const Array& b) { return objective::ssim(to_tensor(a), to_tensor(b)); });

  m.def("read_image", [](const std::string& path) { return to_array(io::load_image(path)); });
  m.def("write_image", [](const std::string& path, const Array& img) { io::save_image(path, to_tensor(img)); });

  m.def("default_config", [] { return RunConfig{}.to_text(); });

  m.def("restore", [](const Array& lq, py::object scale, const std::string& checkpoint, bool identity) {
    Model model;
    if (identity) {
      model.config.link();
      model.params = NetParams::identity(model.config);
    } else {
      model = load_model(checkpoint);
    }
    const auto r = restore(model, to_tensor(lq), scale_of(scale));
    return to_array(r.image);
  }, py::arg("lq"), py::arg("scale") = 1.0, py::arg("checkpoint") = "", py::arg("identity") = false);

  m.def("train", [](const std::vector<Array>& images, const std::string& config_text,
                    const std::string& checkpoint_out) {
    std::vector<Tensor> hq;
    for (const auto& a : images) hq.push_back(to_tensor(a));
    Trainer t(RunConfig::from_text(config_text), hq);
    std::vector<std::string> rows;
    {
      py::gil_scoped_release release;
      t.run(t.config().train.total_iters, [&](const LossRow& r) { rows.push_back(r.tsv()); });
    }
    if (!checkpoint_out.empty()) save_checkpoint(checkpoint_out, t.checkpoint());
    py::dict d;
    d["log"] = rows;
    d["train_l1"] = t.train_l1();
    return d;
  }, py::arg("images"), py::arg("config") = "", py::arg("checkpoint") = "");

  m.def("gradcheck", [](const std::string& selector, std::uint64_t seed, std::size_t seeds) {
    double worst = 0.0;
    bool ok = true;
    for (const auto& r : run_gradcheck_suite(selector, seed, seeds)) {
      worst = std::max(worst, r.report.max_error);
      ok = ok && r.report.passed();
    }
    return py::make_tuple(ok, worst);
  }, py::arg("selector") = "all", py::arg("seed") = 0, py::arg("seeds") = 1);
}
