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

#ifndef SCALEFORM_OPS_HPP_
#define SCALEFORM_OPS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "scaleform/tensor.hpp"

// Differentiable primitives. Every learnable layer in the engine is a
// composition of these; each records its own backward rule on the tape.
namespace scaleform::ops {

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// [B,m,k] x [B,k,n] -> [B,m,n]; with transpose_b, b is [B,n,k].
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false);
// Applies y = x w + b over the last axis. w is [in,out]; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias = {});

// Cross-correlation with zero padding. x [N,C,H,W], w [O,C,kh,kw], bias [O]
// (may be undefined). Output is [N,O,(H+2p-kh)/s+1,(W+2p-kw)/s+1]; the
// division must be exact.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
              std::size_t stride = 1, std::size_t pad = 0);

// Broadcasting arithmetic (numpy rules, right-aligned).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
Tensor relu(const Tensor& x);
// Exact (erf) form.
Tensor gelu(const Tensor& x);
Tensor tanh(const Tensor& x);
// Subgradient at 0 is 0.
Tensor abs(const Tensor& x);
Tensor square(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor sum_axis(const Tensor& x, int axis, bool keepdim = false);
Tensor mean_axis(const Tensor& x, int axis, bool keepdim = false);

// Normalizes to zero mean / unit variance along `axis` (no affine part).
Tensor layernorm(const Tensor& x, int axis, double eps = 1e-5);
// Max-subtracted softmax along `axis`. When `keep` is non-empty it must have
// x.numel() entries; positions with keep == 0 get exactly zero probability,
// which is how -inf logits are represented without leaving finite values.
Tensor softmax(const Tensor& x, int axis, std::span<const std::uint8_t> keep = {});

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& perm);
// out.flat[i] = x.flat[index[i]]. Backward scatter-adds, so repeated indices
// (padding, broadcasting) are handled.
Tensor gather(const Tensor& x, Shape out_shape, std::vector<std::size_t> index);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& x, int axis, std::size_t start, std::size_t length);

}  // namespace scaleform::ops

#endif  // SCALEFORM_OPS_HPP_
