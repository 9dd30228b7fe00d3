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

#include "scaleform/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <utility>

#include "scaleform/errors.hpp"

namespace scaleform::ops {

namespace {

using detail::BackwardFn;
using Grads = std::span<std::span<double>>;

std::size_t norm_axis(const Tensor& x, int axis) {
  const int n = static_cast<int>(x.ndim());
  const int a = axis < 0 ? axis + n : axis;
  if (a < 0 || a >= n) {
    throw DimensionError("axis " + std::to_string(axis) + " invalid for " +
                         shape_str(x.shape()));
  }
  return static_cast<std::size_t>(a);
}

// Splits a shape around `axis` into (outer, n, inner) extents.
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

// C[m,n] += A[m,k] * B[k,n]; inner loop runs over contiguous n.
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c) {
  // 4x4 register tiles; every element still sums p = 0..k-1 in order.
  constexpr std::size_t kT = 4;
  std::size_t i = 0;
  for (; i + kT <= m; i += kT) {
    std::size_t j = 0;
    for (; j + kT <= n; j += kT) {
      double acc[kT][kT];
      for (std::size_t ii = 0; ii < kT; ++ii)
        for (std::size_t jj = 0; jj < kT; ++jj) acc[ii][jj] = c[(i + ii) * n + j + jj];
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * n + j;
        for (std::size_t ii = 0; ii < kT; ++ii) {
          const double av = a[(i + ii) * k + p];
          for (std::size_t jj = 0; jj < kT; ++jj) acc[ii][jj] += av * brow[jj];
        }
      }
      for (std::size_t ii = 0; ii < kT; ++ii)
        for (std::size_t jj = 0; jj < kT; ++jj) c[(i + ii) * n + j + jj] = acc[ii][jj];
    }
    for (std::size_t ii = 0; ii < kT; ++ii)
      for (std::size_t jj = j; jj < n; ++jj) {
        double acc = c[(i + ii) * n + jj];
        for (std::size_t p = 0; p < k; ++p) acc += a[(i + ii) * k + p] * b[p * n + jj];
        c[(i + ii) * n + jj] = acc;
      }
  }
  for (; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c) {
  // Same tiling as gemm_nn; every element sums i = 0..m-1 in order.
  constexpr std::size_t kT = 4;
  std::size_t p = 0;
  for (; p + kT <= k; p += kT) {
    std::size_t j = 0;
    for (; j + kT <= n; j += kT) {
      double acc[kT][kT];
      for (std::size_t pp = 0; pp < kT; ++pp)
        for (std::size_t jj = 0; jj < kT; ++jj) acc[pp][jj] = c[(p + pp) * n + j + jj];
      for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k + p;
        const double* brow = b + i * n + j;
        for (std::size_t pp = 0; pp < kT; ++pp) {
          const double av = arow[pp];
          for (std::size_t jj = 0; jj < kT; ++jj) acc[pp][jj] += av * brow[jj];
        }
      }
      for (std::size_t pp = 0; pp < kT; ++pp)
        for (std::size_t jj = 0; jj < kT; ++jj) c[(p + pp) * n + j + jj] = acc[pp][jj];
    }
    for (std::size_t pp = 0; pp < kT; ++pp)
      for (std::size_t jj = j; jj < n; ++jj) {
        double acc = c[(p + pp) * n + jj];
        for (std::size_t i = 0; i < m; ++i) acc += a[i * k + p + pp] * b[i * n + jj];
        c[(p + pp) * n + jj] = acc;
      }
  }
  for (; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = c[p * n + j];
      for (std::size_t i = 0; i < m; ++i) acc += a[i * k + p] * b[i * n + j];
      c[p * n + j] = acc;
    }
}

std::vector<double> transpose2d(const double* a, std::size_t rows, std::size_t cols) {
  std::vector<double> t(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
  return t;
}

// C[m,n] += A[m,k] * B[n,k]^T
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c) {
  const std::vector<double> bt = transpose2d(b, n, k);
  gemm_nn(m, k, n, a, bt.data(), c);
}

template <class F, class D>
Tensor unary(const char* name, const Tensor& x, F f, D df) {
  const auto xs = x.data();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
  return make_result(name, x.shape(), std::move(out), {x},
                     [x, df](std::span<const double> g, Grads gi) {
                       const auto xs = x.data();
                       for (std::size_t i = 0; i < g.size(); ++i)
                         gi[0][i] += g[i] * df(xs[i]);
                     });
}

// Broadcast plan: output shape plus per-operand strides (0 on broadcast axes).
struct Broadcast {
  Shape out;
  std::vector<std::size_t> sa, sb;
};

Broadcast plan_broadcast(const Shape& a, const Shape& b) {
  const std::size_t n = std::max(a.size(), b.size());
  Broadcast p;
  p.out.assign(n, 1);
  p.sa.assign(n, 0);
  p.sb.assign(n, 0);
  std::size_t stride_a = 1, stride_b = 1;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = n - 1 - r;
    const std::size_t da = r < a.size() ? a[a.size() - 1 - r] : 1;
    const std::size_t db = r < b.size() ? b[b.size() - 1 - r] : 1;
    if (da != db && da != 1 && db != 1) {
      throw DimensionError("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    }
    p.out[i] = std::max(da, db);
    p.sa[i] = da == 1 ? 0 : stride_a;
    p.sb[i] = db == 1 ? 0 : stride_b;
    stride_a *= da;
    stride_b *= db;
  }
  return p;
}

// Visits every output element with the matching operand offsets. The last
// axis is handled as a tight inner loop.
template <class F>
void for_each_broadcast(const Broadcast& p, F&& f) {
  const std::size_t n = p.out.size();
  const std::size_t inner = p.out[n - 1];
  const std::size_t ia = p.sa[n - 1], ib = p.sb[n - 1];
  const std::size_t rows = shape_numel(p.out) / inner;
  std::vector<std::size_t> idx(n, 0);
  std::size_t oa = 0, ob = 0, o = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < inner; ++j) f(o + j, oa + j * ia, ob + j * ib);
    o += inner;
    for (std::size_t d = n - 1; d-- > 0;) {
      if (++idx[d] < p.out[d]) {
        oa += p.sa[d];
        ob += p.sb[d];
        break;
      }
      oa -= p.sa[d] * (p.out[d] - 1);
      ob -= p.sb[d] * (p.out[d] - 1);
      idx[d] = 0;
    }
  }
}

enum class BinOp { kAdd, kSub, kMul };

Tensor binary(const char* name, const Tensor& a, const Tensor& b, BinOp op) {
  const auto as = a.data();
  const auto bs = b.data();
  if (a.shape() == b.shape()) {
    std::vector<double> out(as.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = op == BinOp::kAdd ? as[i] + bs[i]
               : op == BinOp::kSub ? as[i] - bs[i]
                                   : as[i] * bs[i];
    }
    return make_result(name, a.shape(), std::move(out), {a, b},
                       [a, b, op](std::span<const double> g, Grads gi) {
                         if (!gi[0].empty()) {
                           if (op == BinOp::kMul) {
                             const auto bs = b.data();
                             for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * bs[i];
                           } else {
                             for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
                           }
                         }
                         if (!gi[1].empty()) {
                           if (op == BinOp::kMul) {
                             const auto as = a.data();
                             for (std::size_t i = 0; i < g.size(); ++i) gi[1][i] += g[i] * as[i];
                           } else if (op == BinOp::kSub) {
                             for (std::size_t i = 0; i < g.size(); ++i) gi[1][i] -= g[i];
                           } else {
                             for (std::size_t i = 0; i < g.size(); ++i) gi[1][i] += g[i];
                           }
                         }
                       });
  }
  auto plan = std::make_shared<Broadcast>(plan_broadcast(a.shape(), b.shape()));
  std::vector<double> out(shape_numel(plan->out));
  for_each_broadcast(*plan, [&](std::size_t o, std::size_t ia, std::size_t ib) {
    out[o] = op == BinOp::kAdd ? as[ia] + bs[ib]
             : op == BinOp::kSub ? as[ia] - bs[ib]
                                 : as[ia] * bs[ib];
  });
  return make_result(name, plan->out, std::move(out), {a, b},
                     [a, b, op, plan](std::span<const double> g, Grads gi) {
                       const auto as = a.data();
                       const auto bs = b.data();
                       for_each_broadcast(*plan, [&](std::size_t o, std::size_t ia,
                                                     std::size_t ib) {
                         if (!gi[0].empty())
                           gi[0][ia] += op == BinOp::kMul ? g[o] * bs[ib] : g[o];
                         if (!gi[1].empty())
                           gi[1][ib] += op == BinOp::kMul   ? g[o] * as[ia]
                                        : op == BinOp::kSub ? -g[o]
                                                            : g[o];
                       });
                     });
}

std::shared_ptr<std::vector<std::size_t>> share(std::vector<std::size_t> v) {
  return std::make_shared<std::vector<std::size_t>>(std::move(v));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  gemm_nn(m, k, n, a.data().data(), b.data().data(), out.data());
  return make_result("matmul", {m, n}, std::move(out), {a, b},
                     [a, b, m, k, n](std::span<const double> g, Grads gi) {
                       if (!gi[0].empty()) gemm_nt(m, n, k, g.data(), b.data().data(), gi[0].data());
                       if (!gi[1].empty()) gemm_tn(m, k, n, a.data().data(), g.data(), gi[1].data());
                     });
}

Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b) {
  if (a.ndim() != 3 || b.ndim() != 3 || a.dim(0) != b.dim(0)) {
    throw DimensionError("bmm " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2);
  const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
  if ((transpose_b ? b.dim(2) : b.dim(1)) != k) {
    throw DimensionError("bmm inner dimension mismatch " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  std::vector<double> out(batch * m * n, 0.0);
  const double* ap = a.data().data();
  const double* bp = b.data().data();
  for (std::size_t i = 0; i < batch; ++i) {
    if (transpose_b)
      gemm_nt(m, k, n, ap + i * m * k, bp + i * n * k, out.data() + i * m * n);
    else
      gemm_nn(m, k, n, ap + i * m * k, bp + i * k * n, out.data() + i * m * n);
  }
  return make_result(
      "bmm", {batch, m, n}, std::move(out), {a, b},
      [a, b, batch, m, k, n, transpose_b](std::span<const double> g, Grads gi) {
        const double* ap = a.data().data();
        const double* bp = b.data().data();
        for (std::size_t i = 0; i < batch; ++i) {
          const double* gp = g.data() + i * m * n;
          if (!gi[0].empty()) {
            double* da = gi[0].data() + i * m * k;
            if (transpose_b)
              gemm_nn(m, n, k, gp, bp + i * n * k, da);  // dA = G B
            else
              gemm_nt(m, n, k, gp, bp + i * k * n, da);  // dA = G B^T
          }
          if (!gi[1].empty()) {
            if (transpose_b)
              gemm_tn(m, n, k, gp, ap + i * m * k, gi[1].data() + i * n * k);  // dB = G^T A
            else
              gemm_tn(m, k, n, ap + i * m * k, gp, gi[1].data() + i * k * n);  // dB = A^T G
          }
        }
      });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (w.ndim() != 2 || x.dim(-1) != w.dim(0)) {
    throw DimensionError("linear " + shape_str(x.shape()) + " with weight " +
                         shape_str(w.shape()));
  }
  const std::size_t in = w.dim(0), outd = w.dim(1);
  if (bias.defined() && (bias.ndim() != 1 || bias.dim(0) != outd)) {
    throw DimensionError("linear bias " + shape_str(bias.shape()));
  }
  const std::size_t rows = x.numel() / in;
  std::vector<double> out(rows * outd, 0.0);
  if (bias.defined()) {
    const auto bs = bias.data();
    for (std::size_t r = 0; r < rows; ++r) std::copy(bs.begin(), bs.end(), out.begin() + r * outd);
  }
  gemm_nn(rows, in, outd, x.data().data(), w.data().data(), out.data());
  Shape shape = x.shape();
  shape.back() = outd;
  std::vector<Tensor> inputs{x, w};
  if (bias.defined()) inputs.push_back(bias);
  return make_result("linear", std::move(shape), std::move(out), inputs,
                     [x, w, rows, in, outd](std::span<const double> g, Grads gi) {
                       if (!gi[0].empty()) gemm_nt(rows, outd, in, g.data(), w.data().data(), gi[0].data());
                       if (!gi[1].empty()) gemm_tn(rows, in, outd, x.data().data(), g.data(), gi[1].data());
                       if (gi.size() > 2 && !gi[2].empty()) {
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t j = 0; j < outd; ++j) gi[2][j] += g[r * outd + j];
                       }
                     });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride,
              std::size_t pad) {
  if (x.ndim() != 4 || w.ndim() != 4 || x.dim(1) != w.dim(1)) {
    throw DimensionError("conv2d input " + shape_str(x.shape()) + " with weight " +
                         shape_str(w.shape()));
  }
  if (stride == 0) throw DimensionError("conv2d stride must be positive");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t o = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (h + 2 * pad < kh || wd + 2 * pad < kw || (h + 2 * pad - kh) % stride != 0 ||
      (wd + 2 * pad - kw) % stride != 0) {
    throw DimensionError("conv2d output size is not integral for input " +
                         shape_str(x.shape()) + ", kernel " + shape_str(w.shape()) +
                         ", stride " + std::to_string(stride) + ", pad " + std::to_string(pad));
  }
  if (bias.defined() && (bias.ndim() != 1 || bias.dim(0) != o)) {
    throw DimensionError("conv2d bias " + shape_str(bias.shape()));
  }
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1;
  const std::size_t ow = (wd + 2 * pad - kw) / stride + 1;

  // Valid output column range [lo, hi) for kernel column kx (and rows alike).
  struct Span {
    std::size_t lo, hi;
  };
  auto valid = [stride, pad](std::size_t k, std::size_t in, std::size_t out) {
    // need 0 <= o*stride - pad + k < in
    std::size_t lo = 0;
    if (k < pad) lo = (pad - k + stride - 1) / stride;
    std::size_t hi = 0;
    if (in + pad > k) hi = std::min(out, (in + pad - k - 1) / stride + 1);
    return Span{lo, std::max(lo, hi)};
  };

  std::vector<double> out(n * o * oh * ow);
  const double* xp = x.data().data();
  const double* wp = w.data().data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oc = 0; oc < o; ++oc) {
      double* op = out.data() + (b * o + oc) * oh * ow;
      std::fill(op, op + oh * ow, bias.defined() ? bias.data()[oc] : 0.0);
      for (std::size_t ic = 0; ic < c; ++ic) {
        const double* ip = xp + (b * c + ic) * h * wd;
        for (std::size_t ky = 0; ky < kh; ++ky) {
          const Span ys = valid(ky, h, oh);
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const Span xs = valid(kx, wd, ow);
            const double wv = wp[((oc * c + ic) * kh + ky) * kw + kx];
            const std::size_t cols = xs.hi - xs.lo;
            const std::size_t x0 = xs.lo * stride + kx - pad;
            for (std::size_t oy = ys.lo; oy < ys.hi; ++oy) {
              const double* src = ip + (oy * stride + ky - pad) * wd + x0;
              double* dst = op + oy * ow + xs.lo;
              if (stride == 1) {
                for (std::size_t j = 0; j < cols; ++j) dst[j] += wv * src[j];
              } else {
                for (std::size_t j = 0; j < cols; ++j) dst[j] += wv * src[j * stride];
              }
            }
          }
        }
      }
    }
  }
  std::vector<Tensor> inputs{x, w};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      "conv2d", {n, o, oh, ow}, std::move(out), inputs,
      [x, w, n, c, h, wd, o, kh, kw, oh, ow, stride, pad, valid](std::span<const double> g,
                                                                 Grads gi) {
        const double* xp = x.data().data();
        const double* wp = w.data().data();
        std::vector<double> acc(ow);
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t oc = 0; oc < o; ++oc) {
            const double* gp = g.data() + (b * o + oc) * oh * ow;
            if (gi.size() > 2 && !gi[2].empty()) {
              double s = 0.0;
              for (std::size_t i = 0; i < oh * ow; ++i) s += gp[i];
              gi[2][oc] += s;
            }
            for (std::size_t ic = 0; ic < c; ++ic) {
              const double* ip = xp + (b * c + ic) * h * wd;
              double* dxp = gi[0].empty() ? nullptr : gi[0].data() + (b * c + ic) * h * wd;
              for (std::size_t ky = 0; ky < kh; ++ky) {
                const Span ys = valid(ky, h, oh);
                for (std::size_t kx = 0; kx < kw; ++kx) {
                  const Span xs = valid(kx, wd, ow);
                  const std::size_t widx = ((oc * c + ic) * kh + ky) * kw + kx;
                  const double wv = wp[widx];
                  if (!gi[1].empty()) std::fill(acc.begin(), acc.end(), 0.0);
                  const std::size_t cols = xs.hi - xs.lo;
                  const std::size_t x0 = xs.lo * stride + kx - pad;
                  for (std::size_t oy = ys.lo; oy < ys.hi; ++oy) {
                    const std::size_t row = (oy * stride + ky - pad) * wd + x0;
                    const double* grow = gp + oy * ow + xs.lo;
                    if (dxp) {
                      double* drow = dxp + row;
                      if (stride == 1) {
                        for (std::size_t j = 0; j < cols; ++j) drow[j] += wv * grow[j];
                      } else {
                        for (std::size_t j = 0; j < cols; ++j) drow[j * stride] += wv * grow[j];
                      }
                    }
                    if (!gi[1].empty()) {
                      const double* irow = ip + row;
                      if (stride == 1) {
                        for (std::size_t j = 0; j < cols; ++j) acc[j] += grow[j] * irow[j];
                      } else {
                        for (std::size_t j = 0; j < cols; ++j) acc[j] += grow[j] * irow[j * stride];
                      }
                    }
                  }
                  if (!gi[1].empty()) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) s += acc[j];
                    gi[1][widx] += s;
                  }
                }
              }
            }
          }
        }
      });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary("add", a, b, BinOp::kAdd); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary("sub", a, b, BinOp::kSub); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary("mul", a, b, BinOp::kMul); }

Tensor scale(const Tensor& x, double factor) {
  return unary("scale", x, [factor](double v) { return v * factor; },
               [factor](double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary("add_scalar", x, [value](double v) { return v + value; },
               [](double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
  return unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return unary(
      "gelu", x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [](double v) {
        return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) + v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
      });
}

Tensor tanh(const Tensor& x) {
  return unary("tanh", x, [](double v) { return std::tanh(v); },
               [](double v) {
                 const double t = std::tanh(v);
                 return 1.0 - t * t;
               });
}

Tensor abs(const Tensor& x) {
  return unary("abs", x, [](double v) { return std::fabs(v); },
               [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& x) {
  return unary("square", x, [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result("sum", {1}, {s}, {x}, [](std::span<const double> g, Grads gi) {
    for (double& v : gi[0]) v += g[0];
  });
}

Tensor mean(const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.numel());
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result("mean", {1}, {s * inv}, {x}, [inv](std::span<const double> g, Grads gi) {
    const double gv = g[0] * inv;
    for (double& v : gi[0]) v += gv;
  });
}

Tensor sum_axis(const Tensor& x, int axis, bool keepdim) {
  const std::size_t ax = norm_axis(x, axis);
  const AxisSplit sp = split_at(x.shape(), ax);
  std::vector<double> out(sp.outer * sp.inner, 0.0);
  const auto xs = x.data();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.n; ++i) {
      const double* src = xs.data() + (o * sp.n + i) * sp.inner;
      double* dst = out.data() + o * sp.inner;
      for (std::size_t j = 0; j < sp.inner; ++j) dst[j] += src[j];
    }
  Shape shape = x.shape();
  if (keepdim) {
    shape[ax] = 1;
  } else {
    shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(ax));
    if (shape.empty()) shape.push_back(1);
  }
  return make_result("sum_axis", std::move(shape), std::move(out), {x},
                     [sp](std::span<const double> g, Grads gi) {
                       for (std::size_t o = 0; o < sp.outer; ++o)
                         for (std::size_t i = 0; i < sp.n; ++i) {
                           double* dst = gi[0].data() + (o * sp.n + i) * sp.inner;
                           const double* src = g.data() + o * sp.inner;
                           for (std::size_t j = 0; j < sp.inner; ++j) dst[j] += src[j];
                         }
                     });
}

Tensor mean_axis(const Tensor& x, int axis, bool keepdim) {
  const std::size_t n = x.dim(axis);
  return scale(sum_axis(x, axis, keepdim), 1.0 / static_cast<double>(n));
}

Tensor layernorm(const Tensor& x, int axis, double eps) {
  const std::size_t ax = norm_axis(x, axis);
  const AxisSplit sp = split_at(x.shape(), ax);
  const auto xs = x.data();
  std::vector<double> out(xs.size());
  auto inv_std = std::make_shared<std::vector<double>>(sp.outer * sp.inner);
  const double inv_n = 1.0 / static_cast<double>(sp.n);
  std::vector<double> mu(sp.inner), var(sp.inner);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    const double* base = xs.data() + o * sp.n * sp.inner;
    double* obase = out.data() + o * sp.n * sp.inner;
    std::fill(mu.begin(), mu.end(), 0.0);
    std::fill(var.begin(), var.end(), 0.0);
    for (std::size_t i = 0; i < sp.n; ++i)
      for (std::size_t j = 0; j < sp.inner; ++j) mu[j] += base[i * sp.inner + j];
    for (double& m : mu) m *= inv_n;
    for (std::size_t i = 0; i < sp.n; ++i)
      for (std::size_t j = 0; j < sp.inner; ++j) {
        const double d = base[i * sp.inner + j] - mu[j];
        var[j] += d * d;
      }
    for (std::size_t j = 0; j < sp.inner; ++j) {
      (*inv_std)[o * sp.inner + j] = 1.0 / std::sqrt(var[j] * inv_n + eps);
    }
    for (std::size_t i = 0; i < sp.n; ++i)
      for (std::size_t j = 0; j < sp.inner; ++j)
        obase[i * sp.inner + j] = (base[i * sp.inner + j] - mu[j]) * (*inv_std)[o * sp.inner + j];
  }
  auto y = std::make_shared<std::vector<double>>(out);
  return make_result(
      "layernorm", x.shape(), std::move(out), {x},
      [sp, inv_std, y, inv_n](std::span<const double> g, Grads gi) {
        std::vector<double> mg(sp.inner), mgy(sp.inner);
        for (std::size_t o = 0; o < sp.outer; ++o) {
          const std::size_t base = o * sp.n * sp.inner;
          std::fill(mg.begin(), mg.end(), 0.0);
          std::fill(mgy.begin(), mgy.end(), 0.0);
          for (std::size_t i = 0; i < sp.n; ++i)
            for (std::size_t j = 0; j < sp.inner; ++j) {
              const std::size_t k = base + i * sp.inner + j;
              mg[j] += g[k];
              mgy[j] += g[k] * (*y)[k];
            }
          for (std::size_t i = 0; i < sp.n; ++i)
            for (std::size_t j = 0; j < sp.inner; ++j) {
              const std::size_t k = base + i * sp.inner + j;
              gi[0][k] += (*inv_std)[o * sp.inner + j] *
                          (g[k] - mg[j] * inv_n - (*y)[k] * mgy[j] * inv_n);
            }
        }
      });
}

Tensor softmax(const Tensor& x, int axis, std::span<const std::uint8_t> keep) {
  const std::size_t ax = norm_axis(x, axis);
  const AxisSplit sp = split_at(x.shape(), ax);
  if (!keep.empty() && keep.size() != x.numel()) {
    throw DimensionError("softmax keep-mask size mismatch");
  }
  const auto xs = x.data();
  std::vector<double> out(xs.size(), 0.0);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t j = 0; j < sp.inner; ++j) {
      const std::size_t base = o * sp.n * sp.inner + j;
      auto kept = [&](std::size_t i) { return keep.empty() || keep[base + i * sp.inner]; };
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < sp.n; ++i)
        if (kept(i)) mx = std::max(mx, xs[base + i * sp.inner]);
      if (mx == -std::numeric_limits<double>::infinity()) {
        throw NumericError("softmax row has no unmasked entries");
      }
      double s = 0.0;
      for (std::size_t i = 0; i < sp.n; ++i) {
        if (!kept(i)) continue;
        const double e = std::exp(xs[base + i * sp.inner] - mx);
        out[base + i * sp.inner] = e;
        s += e;
      }
      const double inv = 1.0 / s;
      for (std::size_t i = 0; i < sp.n; ++i) out[base + i * sp.inner] *= inv;
    }
  auto y = std::make_shared<std::vector<double>>(out);
  return make_result("softmax", x.shape(), std::move(out), {x},
                     [sp, y](std::span<const double> g, Grads gi) {
                       for (std::size_t o = 0; o < sp.outer; ++o)
                         for (std::size_t j = 0; j < sp.inner; ++j) {
                           const std::size_t base = o * sp.n * sp.inner + j;
                           double dot = 0.0;
                           for (std::size_t i = 0; i < sp.n; ++i)
                             dot += g[base + i * sp.inner] * (*y)[base + i * sp.inner];
                           for (std::size_t i = 0; i < sp.n; ++i) {
                             const std::size_t k = base + i * sp.inner;
                             gi[0][k] += (*y)[k] * (g[k] - dot);
                           }
                         }
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  const auto xs = x.data();
  return make_result("reshape", std::move(shape), std::vector<double>(xs.begin(), xs.end()), {x},
                     [](std::span<const double> g, Grads gi) {
                       for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
                     });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& perm) {
  const Shape& s = x.shape();
  if (perm.size() != s.size()) throw DimensionError("permute rank mismatch");
  std::vector<bool> seen(s.size(), false);
  for (std::size_t p : perm) {
    if (p >= s.size() || seen[p]) throw DimensionError("permute: invalid permutation");
    seen[p] = true;
  }
  std::vector<std::size_t> in_stride(s.size(), 1);
  for (std::size_t i = s.size() - 1; i-- > 0;) in_stride[i] = in_stride[i + 1] * s[i + 1];
  Shape out_shape(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out_shape[i] = s[perm[i]];
  std::vector<std::size_t> index(x.numel());
  std::vector<std::size_t> idx(s.size(), 0);
  for (std::size_t flat = 0; flat < index.size(); ++flat) {
    std::size_t off = 0;
    for (std::size_t d = 0; d < s.size(); ++d) off += idx[d] * in_stride[perm[d]];
    index[flat] = off;
    for (std::size_t d = s.size(); d-- > 0;) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }
  return gather(x, std::move(out_shape), std::move(index));
}

Tensor gather(const Tensor& x, Shape out_shape, std::vector<std::size_t> index) {
  if (shape_numel(out_shape) != index.size()) {
    throw DimensionError("gather index count does not match " + shape_str(out_shape));
  }
  const auto xs = x.data();
  std::vector<double> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= xs.size()) throw DimensionError("gather index out of range");
    out[i] = xs[index[i]];
  }
  auto idx = share(std::move(index));
  return make_result("gather", std::move(out_shape), std::move(out), {x},
                     [idx](std::span<const double> g, Grads gi) {
                       const auto& ix = *idx;
                       for (std::size_t i = 0; i < ix.size(); ++i) gi[0][ix[i]] += g[i];
                     });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw DimensionError("concat of nothing");
  const std::size_t ax = norm_axis(parts[0], axis);
  Shape shape = parts[0].shape();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.ndim() != shape.size()) throw DimensionError("concat rank mismatch");
    for (std::size_t d = 0; d < shape.size(); ++d)
      if (d != ax && p.shape()[d] != shape[d]) throw DimensionError("concat shape mismatch");
    total += p.shape()[ax];
  }
  shape[ax] = total;
  const AxisSplit sp = split_at(shape, ax);
  std::vector<double> out(shape_numel(shape));
  auto widths = std::make_shared<std::vector<std::size_t>>();
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const std::size_t w = p.shape()[ax] * sp.inner;
    const auto ps = p.data();
    for (std::size_t o = 0; o < sp.outer; ++o)
      std::copy(ps.begin() + static_cast<std::ptrdiff_t>(o * w),
                ps.begin() + static_cast<std::ptrdiff_t>((o + 1) * w),
                out.begin() + static_cast<std::ptrdiff_t>(o * sp.n * sp.inner + offset));
    widths->push_back(w);
    offset += w;
  }
  const std::size_t row = sp.n * sp.inner;
  const std::size_t outer = sp.outer;
  return make_result("concat", std::move(shape), std::move(out), parts,
                     [widths, row, outer](std::span<const double> g, Grads gi) {
                       std::size_t offset = 0;
                       for (std::size_t p = 0; p < widths->size(); ++p) {
                         const std::size_t w = (*widths)[p];
                         if (!gi[p].empty()) {
                           for (std::size_t o = 0; o < outer; ++o)
                             for (std::size_t j = 0; j < w; ++j)
                               gi[p][o * w + j] += g[o * row + offset + j];
                         }
                         offset += w;
                       }
                     });
}

Tensor slice(const Tensor& x, int axis, std::size_t start, std::size_t length) {
  const std::size_t ax = norm_axis(x, axis);
  if (length == 0 || start + length > x.shape()[ax]) {
    throw DimensionError("slice out of range on " + shape_str(x.shape()));
  }
  const AxisSplit sp = split_at(x.shape(), ax);
  Shape shape = x.shape();
  shape[ax] = length;
  std::vector<std::size_t> index;
  index.reserve(shape_numel(shape));
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = start; i < start + length; ++i)
      for (std::size_t j = 0; j < sp.inner; ++j) index.push_back((o * sp.n + i) * sp.inner + j);
  return gather(x, std::move(shape), std::move(index));
}

}  // namespace scaleform::ops
