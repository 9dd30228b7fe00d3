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

#ifndef SCALEFORM_TENSOR_HPP_
#define SCALEFORM_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace scaleform {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node;

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  // Accumulated gradient; only populated on leaves that require grad.
  std::vector<double> grad;
  bool requires_grad = false;
  std::shared_ptr<Node> node;
};

// Receives the output gradient and one span per input. A span is empty when
// that input does not need a gradient; otherwise the rule must accumulate (+=).
using BackwardFn =
    std::function<void(std::span<const double>, std::span<std::span<double>>)>;

struct Node {
  const char* op = "";
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  BackwardFn backward;
};

}  // namespace detail

// Dense row-major float64 array with an optional reverse-mode tape entry.
//
// Copies are shallow: two handles to the same tensor share data and grad, the
// way parameters are shared between a module and the optimizer. Values are
// never mutated by operations; only parameter updates write through
// mutable_data().
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t ndim() const { return shape().size(); }
  // Negative axes count from the back.
  std::size_t dim(int axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  // Empty until the first backward pass reaches this leaf.
  std::span<const double> grad() const;
  bool has_grad() const;
  void zero_grad();

  // Same values, no tape history.
  Tensor detach() const;
  Tensor clone() const;

  bool is_leaf() const;
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl)
      : impl_(std::move(impl)) {}
  friend Tensor make_result(const char*, Shape, std::vector<double>,
                            std::initializer_list<Tensor>,
                            detail::BackwardFn);
  friend Tensor make_result(const char*, Shape, std::vector<double>,
                            const std::vector<Tensor>&, detail::BackwardFn);

  std::shared_ptr<detail::TensorImpl> impl_;
};

// Builds an operation output. The tape entry is recorded only when gradient
// mode is on and some input requires grad. Throws NumericError on non-finite
// output values.
Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   std::initializer_list<Tensor> inputs,
                   detail::BackwardFn backward);
Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   const std::vector<Tensor>& inputs,
                   detail::BackwardFn backward);

// Reverse sweep from a scalar loss. Leaf gradients accumulate across calls.
void backward(const Tensor& loss);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

enum class Precision { kFloat64, kFloat32 };

Precision inference_precision();

// Inference-only: while active (and gradients are off) every op output is
// rounded to float32.
class PrecisionGuard {
 public:
  explicit PrecisionGuard(Precision precision);
  ~PrecisionGuard();
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  Precision previous_;
};

}  // namespace scaleform

#endif  // SCALEFORM_TENSOR_HPP_
