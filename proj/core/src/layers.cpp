// Copyright 2026 The CTA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cta/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cta/error.hpp"

namespace cta {

namespace {

template <typename Real>
void check_rank(const Tensor<Real>& t, std::size_t rank, const char* what) {
  require(t.rank() == rank, ErrorCode::kShapeMismatch,
          std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
              shape_string(t.shape()));
}

// Unrolled dot product; four partial sums let the compiler keep lanes busy
// without reassociating a single accumulator.
template <typename Real>
Real dot(const Real* a, const Real* b, std::size_t n) {
  Real s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// y += a * x
template <typename Real>
inline void axpy(Real a, const Real* x, Real* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

struct ConvGeometry {
  std::size_t n, c, h, w, oc, k, pad, hw, patch;
};

template <typename Real>
ConvGeometry conv_geometry(const Tensor<Real>& x, const Tensor<Real>& w) {
  check_rank(x, 4, "conv2d input");
  check_rank(w, 4, "conv2d weight");
  require(w.dim(1) == x.dim(1), ErrorCode::kShapeMismatch,
          "conv2d weight expects " + std::to_string(w.dim(1)) + " input channels, got " +
              std::to_string(x.dim(1)));
  require(w.dim(2) == w.dim(3) && w.dim(2) % 2 == 1, ErrorCode::kShapeMismatch,
          "conv2d kernel must be square and odd, got " + shape_string(w.shape()));
  ConvGeometry g{};
  g.n = x.dim(0);
  g.c = x.dim(1);
  g.h = x.dim(2);
  g.w = x.dim(3);
  g.oc = w.dim(0);
  g.k = w.dim(2);
  g.pad = g.k / 2;
  g.hw = g.h * g.w;
  g.patch = g.c * g.k * g.k;
  return g;
}

// cols[(c, ki, kj), (y, x)] = image[c, y + ki - pad, x + kj - pad], zero outside.
template <typename Real>
void im2col(const Real* image, const ConvGeometry& g, Real* cols) {
  for (std::size_t c = 0; c < g.c; ++c) {
    const Real* plane = image + c * g.hw;
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        Real* row = cols + ((c * g.k + ki) * g.k + kj) * g.hw;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ki) - static_cast<std::ptrdiff_t>(g.pad);
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kj) - static_cast<std::ptrdiff_t>(g.pad);
        const std::size_t x_lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dx));
        const std::size_t x_hi = static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.w),
                                     static_cast<std::ptrdiff_t>(g.w) - dx));
        for (std::size_t y = 0; y < g.h; ++y) {
          Real* out = row + y * g.w;
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(out, out + g.w, Real{0});
            continue;
          }
          const Real* src = plane + static_cast<std::size_t>(sy) * g.w;
          std::fill(out, out + x_lo, Real{0});
          for (std::size_t x = x_lo; x < x_hi; ++x) out[x] = src[x + dx];
          std::fill(out + x_hi, out + g.w, Real{0});
        }
      }
    }
  }
}

template <typename Real>
void col2im(const Real* cols, const ConvGeometry& g, Real* image) {
  for (std::size_t c = 0; c < g.c; ++c) {
    Real* plane = image + c * g.hw;
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        const Real* row = cols + ((c * g.k + ki) * g.k + kj) * g.hw;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ki) - static_cast<std::ptrdiff_t>(g.pad);
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kj) - static_cast<std::ptrdiff_t>(g.pad);
        const std::size_t x_lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dx));
        const std::size_t x_hi = static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.w),
                                     static_cast<std::ptrdiff_t>(g.w) - dx));
        for (std::size_t y = 0; y < g.h; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          Real* dst = plane + static_cast<std::size_t>(sy) * g.w;
          const Real* in = row + y * g.w;
          for (std::size_t x = x_lo; x < x_hi; ++x) dst[x + dx] += in[x];
        }
      }
    }
  }
}

template <typename Real>
void transpose(const Real* src, std::size_t rows, std::size_t cols, Real* dst) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
}

}  // namespace

template <typename Real>
Tensor<Real> dense_forward(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>& b) {
  check_rank(x, 2, "dense input");
  check_rank(w, 2, "dense weight");
  require(w.dim(1) == x.dim(1), ErrorCode::kShapeMismatch,
          "dense weight " + shape_string(w.shape()) + " vs input " + shape_string(x.shape()));
  require(b.size() == w.dim(0), ErrorCode::kShapeMismatch, "dense bias length mismatch");
  const std::size_t n = x.dim(0), in = x.dim(1), out = w.dim(0);
  Tensor<Real> y({n, out});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t o = 0; o < out; ++o)
      y[r * out + o] = b[o] + dot(x.raw() + r * in, w.raw() + o * in, in);
  return y;
}

template <typename Real>
DenseGrads<Real> dense_backward(const Tensor<Real>& x, const Tensor<Real>& w,
                                const Tensor<Real>& dy, bool need_dx, bool need_params) {
  check_rank(dy, 2, "dense gradient");
  require(dy.dim(0) == x.dim(0) && dy.dim(1) == w.dim(0), ErrorCode::kShapeMismatch,
          "dense gradient " + shape_string(dy.shape()));
  const std::size_t n = x.dim(0), in = x.dim(1), out = w.dim(0);
  DenseGrads<Real> g;
  if (need_dx) {
    g.dx = Tensor<Real>(x.shape());
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t o = 0; o < out; ++o)
        axpy(dy[r * out + o], w.raw() + o * in, g.dx.raw() + r * in, in);
  }
  if (need_params) {
    g.dw = Tensor<Real>(w.shape());
    g.db = Tensor<Real>({out});
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t o = 0; o < out; ++o) {
        const Real a = dy[r * out + o];
        g.db[o] += a;
        axpy(a, x.raw() + r * in, g.dw.raw() + o * in, in);
      }
  }
  return g;
}

template <typename Real>
Tensor<Real> conv2d_forward(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>& b) {
  const ConvGeometry g = conv_geometry(x, w);
  require(b.size() == g.oc, ErrorCode::kShapeMismatch, "conv2d bias length mismatch");
  Tensor<Real> y({g.n, g.oc, g.h, g.w});
  std::vector<Real> cols(g.patch * g.hw);
  for (std::size_t s = 0; s < g.n; ++s) {
    im2col(x.raw() + s * g.c * g.hw, g, cols.data());
    Real* out = y.raw() + s * g.oc * g.hw;
    for (std::size_t o = 0; o < g.oc; ++o) {
      Real* orow = out + o * g.hw;
      std::fill(orow, orow + g.hw, b[o]);
      const Real* wrow = w.raw() + o * g.patch;
      for (std::size_t k = 0; k < g.patch; ++k) axpy(wrow[k], cols.data() + k * g.hw, orow, g.hw);
    }
  }
  return y;
}

template <typename Real>
Conv2dGrads<Real> conv2d_backward(const Tensor<Real>& x, const Tensor<Real>& w,
                                  const Tensor<Real>& dy, bool need_dx, bool need_params) {
  const ConvGeometry g = conv_geometry(x, w);
  require(dy.shape() == Shape({g.n, g.oc, g.h, g.w}), ErrorCode::kShapeMismatch,
          "conv2d gradient " + shape_string(dy.shape()));
  Conv2dGrads<Real> grads;
  if (need_dx) grads.dx = Tensor<Real>(x.shape());
  if (need_params) {
    grads.dw = Tensor<Real>(w.shape());
    grads.db = Tensor<Real>({g.oc});
  }
  std::vector<Real> cols(g.patch * g.hw), cols_t(need_params ? g.patch * g.hw : 0);
  for (std::size_t s = 0; s < g.n; ++s) {
    const Real* dout = dy.raw() + s * g.oc * g.hw;
    if (need_params) {
      im2col(x.raw() + s * g.c * g.hw, g, cols.data());
      transpose(cols.data(), g.patch, g.hw, cols_t.data());
      for (std::size_t o = 0; o < g.oc; ++o) {
        const Real* drow = dout + o * g.hw;
        Real* dwrow = grads.dw.raw() + o * g.patch;
        Real bsum = 0;
        for (std::size_t j = 0; j < g.hw; ++j) {
          bsum += drow[j];
          axpy(drow[j], cols_t.data() + j * g.patch, dwrow, g.patch);
        }
        grads.db[o] += bsum;
      }
    }
    if (need_dx) {
      std::fill(cols.begin(), cols.end(), Real{0});
      for (std::size_t o = 0; o < g.oc; ++o) {
        const Real* wrow = w.raw() + o * g.patch;
        const Real* drow = dout + o * g.hw;
        for (std::size_t k = 0; k < g.patch; ++k) axpy(wrow[k], drow, cols.data() + k * g.hw, g.hw);
      }
      col2im(cols.data(), g, grads.dx.raw() + s * g.c * g.hw);
    }
  }
  return grads;
}

template <typename Real>
Tensor<Real> relu_forward(const Tensor<Real>& x) {
  Tensor<Real> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > Real{0} ? x[i] : Real{0};
  return y;
}

template <typename Real>
Tensor<Real> relu_backward(const Tensor<Real>& x, const Tensor<Real>& dy) {
  require(x.shape() == dy.shape(), ErrorCode::kShapeMismatch, "relu gradient shape mismatch");
  Tensor<Real> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > Real{0} ? dy[i] : Real{0};
  return dx;
}

template <typename Real>
Tensor<Real> avgpool_forward(const Tensor<Real>& x, std::size_t window) {
  check_rank(x, 4, "avgpool input");
  require(window >= 1 && x.dim(2) % window == 0 && x.dim(3) % window == 0,
          ErrorCode::kShapeMismatch,
          "avgpool window " + std::to_string(window) + " does not tile " + shape_string(x.shape()));
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = h / window, ow = w / window;
  const Real scale = Real{1} / static_cast<Real>(window * window);
  Tensor<Real> y({n, c, oh, ow});
  for (std::size_t p = 0; p < n * c; ++p) {
    const Real* in = x.raw() + p * h * w;
    Real* out = y.raw() + p * oh * ow;
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        Real s = 0;
        for (std::size_t a = 0; a < window; ++a)
          for (std::size_t b = 0; b < window; ++b) s += in[(i * window + a) * w + j * window + b];
        out[i * ow + j] = s * scale;
      }
  }
  return y;
}

template <typename Real>
Tensor<Real> avgpool_backward(const Shape& input_shape, const Tensor<Real>& dy,
                              std::size_t window) {
  require(input_shape.size() == 4 && dy.rank() == 4 &&
              dy.dim(2) * window == input_shape[2] && dy.dim(3) * window == input_shape[3],
          ErrorCode::kShapeMismatch, "avgpool gradient shape mismatch");
  const std::size_t h = input_shape[2], w = input_shape[3];
  const std::size_t oh = dy.dim(2), ow = dy.dim(3);
  const Real scale = Real{1} / static_cast<Real>(window * window);
  Tensor<Real> dx(input_shape);
  for (std::size_t p = 0; p < input_shape[0] * input_shape[1]; ++p) {
    const Real* in = dy.raw() + p * oh * ow;
    Real* out = dx.raw() + p * h * w;
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        const Real v = in[i * ow + j] * scale;
        for (std::size_t a = 0; a < window; ++a)
          for (std::size_t b = 0; b < window; ++b) out[(i * window + a) * w + j * window + b] = v;
      }
  }
  return dx;
}

template <typename Real>
Tensor<Real> log_softmax(const Tensor<Real>& logits) {
  check_rank(logits, 2, "logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor<Real> out(logits.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const Real* z = logits.raw() + r * k;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) m = std::max(m, static_cast<double>(z[i]));
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += std::exp(z[i] - m);
    const double lse = m + std::log(s);
    for (std::size_t i = 0; i < k; ++i) out[r * k + i] = static_cast<Real>(z[i] - lse);
  }
  return out;
}

template <typename Real>
Tensor<Real> softmax_forward(const Tensor<Real>& logits) {
  check_rank(logits, 2, "logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor<Real> out(logits.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const Real* z = logits.raw() + r * k;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) m = std::max(m, static_cast<double>(z[i]));
    double s = 0.0;
    std::vector<double> e(k);
    for (std::size_t i = 0; i < k; ++i) s += (e[i] = std::exp(z[i] - m));
    for (std::size_t i = 0; i < k; ++i) out[r * k + i] = static_cast<Real>(e[i] / s);
  }
  return out;
}

template <typename Real>
Tensor<Real> softmax_backward(const Tensor<Real>& probs, const Tensor<Real>& dprobs) {
  require(probs.shape() == dprobs.shape(), ErrorCode::kShapeMismatch,
          "softmax gradient shape mismatch");
  check_rank(probs, 2, "softmax output");
  const std::size_t n = probs.dim(0), k = probs.dim(1);
  Tensor<Real> dz(probs.shape());
  for (std::size_t r = 0; r < n; ++r) {
    double inner = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      inner += static_cast<double>(probs[r * k + i]) * dprobs[r * k + i];
    for (std::size_t i = 0; i < k; ++i)
      dz[r * k + i] = static_cast<Real>(probs[r * k + i] * (dprobs[r * k + i] - inner));
  }
  return dz;
}

template <typename Real>
double soft_cross_entropy(const Tensor<Real>& target, const Tensor<Real>& pred) {
  require(target.shape() == pred.shape(), ErrorCode::kShapeMismatch,
          "cross-entropy target " + shape_string(target.shape()) + " vs prediction " +
              shape_string(pred.shape()));
  check_rank(pred, 2, "prediction");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (target[i] != Real{0}) total -= static_cast<double>(target[i]) * std::log(pred[i]);
  return total / static_cast<double>(pred.dim(0));
}

template <typename Real>
SoftCrossEntropyGrads<Real> soft_cross_entropy_backward(const Tensor<Real>& target,
                                                        const Tensor<Real>& pred) {
  require(target.shape() == pred.shape(), ErrorCode::kShapeMismatch,
          "cross-entropy gradient shape mismatch");
  check_rank(pred, 2, "prediction");
  const double inv_n = 1.0 / static_cast<double>(pred.dim(0));
  SoftCrossEntropyGrads<Real> g{Tensor<Real>(pred.shape()), Tensor<Real>(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    g.dtarget[i] = static_cast<Real>(-std::log(static_cast<double>(pred[i])) * inv_n);
    g.dpred[i] = static_cast<Real>(-static_cast<double>(target[i]) / pred[i] * inv_n);
  }
  return g;
}

template <typename Real>
LogitLoss<Real> cross_entropy_with_logits(const Tensor<Real>& logits,
                                          std::span<const int> labels) {
  check_rank(logits, 2, "logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  require(labels.size() == n, ErrorCode::kShapeMismatch, "label count differs from batch size");
  const Tensor<Real> logp = log_softmax(logits);
  LogitLoss<Real> out{0.0, Tensor<Real>(logits.shape())};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const int y = labels[r];
    require(y >= 0 && static_cast<std::size_t>(y) < k, ErrorCode::kOutOfRange,
            "label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
    out.loss -= logp[r * k + static_cast<std::size_t>(y)];
    for (std::size_t i = 0; i < k; ++i) {
      const double p = std::exp(static_cast<double>(logp[r * k + i]));
      out.dlogits[r * k + i] = static_cast<Real>((p - (static_cast<int>(i) == y ? 1.0 : 0.0)) * inv_n);
    }
  }
  out.loss *= inv_n;
  return out;
}

template <typename Real>
LogitLoss<Real> entropy_with_logits(const Tensor<Real>& logits) {
  check_rank(logits, 2, "logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  const Tensor<Real> logp = log_softmax(logits);
  LogitLoss<Real> out{0.0, Tensor<Real>(logits.shape())};
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> p(k);
  for (std::size_t r = 0; r < n; ++r) {
    double h = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double lp = logp[r * k + i];
      p[i] = std::exp(lp);
      h -= p[i] * lp;
    }
    out.loss += h;
    // dH/dz_j = -p_j (ln p_j + H)
    for (std::size_t i = 0; i < k; ++i)
      out.dlogits[r * k + i] = static_cast<Real>(-p[i] * (logp[r * k + i] + h) * inv_n);
  }
  out.loss *= inv_n;
  return out;
}

template <typename Real>
LogitLoss<Real> soft_cross_entropy_with_logits(const Tensor<Real>& target,
                                               const Tensor<Real>& logits) {
  require(target.shape() == logits.shape(), ErrorCode::kShapeMismatch,
          "soft target " + shape_string(target.shape()) + " vs logits " +
              shape_string(logits.shape()));
  check_rank(logits, 2, "logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  const Tensor<Real> logp = log_softmax(logits);
  LogitLoss<Real> out{0.0, Tensor<Real>(logits.shape())};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    double tsum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double t = target[r * k + i];
      tsum += t;
      out.loss -= t * logp[r * k + i];
    }
    for (std::size_t i = 0; i < k; ++i) {
      const double p = std::exp(static_cast<double>(logp[r * k + i]));
      out.dlogits[r * k + i] = static_cast<Real>((p * tsum - target[r * k + i]) * inv_n);
    }
  }
  out.loss *= inv_n;
  return out;
}

template <typename Real>
std::vector<int> argmax_rows(const Tensor<Real>& matrix) {
  check_rank(matrix, 2, "matrix");
  const std::size_t n = matrix.dim(0), k = matrix.dim(1);
  std::vector<int> out(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < k; ++i)
      if (matrix[r * k + i] > matrix[r * k + best]) best = i;
    out[r] = static_cast<int>(best);
  }
  return out;
}

#define CTA_INSTANTIATE(Real)                                                                  \
  template Tensor<Real> dense_forward(const Tensor<Real>&, const Tensor<Real>&,                \
                                      const Tensor<Real>&);                                    \
  template DenseGrads<Real> dense_backward(const Tensor<Real>&, const Tensor<Real>&,           \
                                           const Tensor<Real>&, bool, bool);                   \
  template Tensor<Real> conv2d_forward(const Tensor<Real>&, const Tensor<Real>&,               \
                                       const Tensor<Real>&);                                   \
  template Conv2dGrads<Real> conv2d_backward(const Tensor<Real>&, const Tensor<Real>&,         \
                                             const Tensor<Real>&, bool, bool);                 \
  template Tensor<Real> relu_forward(const Tensor<Real>&);                                     \
  template Tensor<Real> relu_backward(const Tensor<Real>&, const Tensor<Real>&);               \
  template Tensor<Real> avgpool_forward(const Tensor<Real>&, std::size_t);                     \
  template Tensor<Real> avgpool_backward(const Shape&, const Tensor<Real>&, std::size_t);      \
  template Tensor<Real> softmax_forward(const Tensor<Real>&);                                  \
  template Tensor<Real> softmax_backward(const Tensor<Real>&, const Tensor<Real>&);            \
  template Tensor<Real> log_softmax(const Tensor<Real>&);                                      \
  template double soft_cross_entropy(const Tensor<Real>&, const Tensor<Real>&);                \
  template SoftCrossEntropyGrads<Real> soft_cross_entropy_backward(const Tensor<Real>&,        \
                                                                   const Tensor<Real>&);       \
  template LogitLoss<Real> cross_entropy_with_logits(const Tensor<Real>&,                      \
                                                     std::span<const int>);                    \
  template LogitLoss<Real> entropy_with_logits(const Tensor<Real>&);                           \
  template LogitLoss<Real> soft_cross_entropy_with_logits(const Tensor<Real>&,                 \
                                                          const Tensor<Real>&);                \
  template std::vector<int> argmax_rows(const Tensor<Real>&);

CTA_INSTANTIATE(float)
CTA_INSTANTIATE(double)
#undef CTA_INSTANTIATE

}  // namespace cta
