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

#include "cta/batchnorm.hpp"

#include <cmath>

#include "cta/error.hpp"
#include "cta/numerics.hpp"

namespace cta {

std::string_view to_string(StatMode mode) {
  switch (mode) {
    case StatMode::kTrainUpdate: return "train-update";
    case StatMode::kFrozenSource: return "frozen-source";
    case StatMode::kTestBatch: return "test-batch";
  }
  return "unknown";
}

template <typename Real>
BatchNormState<Real> BatchNormState<Real>::identity(std::size_t channels) {
  BatchNormState s;
  s.gamma = Tensor<Real>({channels}, Real{1});
  s.beta = Tensor<Real>({channels}, Real{0});
  s.running_mean = Tensor<Real>({channels}, Real{0});
  s.running_var = Tensor<Real>({channels}, Real{1});
  return s;
}

template <typename Real>
void BatchNormState<Real>::validate() const {
  const std::size_t c = gamma.size();
  require(beta.size() == c && running_mean.size() == c && running_var.size() == c,
          ErrorCode::kShapeMismatch, "batchnorm state tensors differ in channel count");
  require(epsilon >= 0.0, ErrorCode::kInvalidArgument, "batchnorm epsilon must be >= 0");
  require(stat_momentum >= 0.0 && stat_momentum <= 1.0, ErrorCode::kOutOfRange,
          "batchnorm stat momentum must lie in [0, 1]");
  for (std::size_t i = 0; i < c; ++i)
    require(running_var[i] >= 0, ErrorCode::kInvalidArgument, "running variance is negative");
}

namespace {

struct Layout {
  std::size_t n, c, s;
};

template <typename Real>
Layout layout_of(const Tensor<Real>& x, std::size_t channels) {
  require(x.rank() == 2 || x.rank() == 4, ErrorCode::kShapeMismatch,
          "batchnorm expects N x C or N x C x H x W, got " + shape_string(x.shape()));
  require(x.dim(0) >= 1, ErrorCode::kInvalidArgument, "batchnorm on an empty batch");
  require(x.dim(1) == channels, ErrorCode::kShapeMismatch,
          "input has " + std::to_string(x.dim(1)) + " channels, batchnorm has " +
              std::to_string(channels));
  const std::size_t s = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
  return {x.dim(0), x.dim(1), s};
}

}  // namespace

template <typename Real>
BatchNormForward<Real> batchnorm_forward(const Tensor<Real>& x, const Tensor<Real>& gamma,
                                         const Tensor<Real>& beta,
                                         const Tensor<Real>& running_mean,
                                         const Tensor<Real>& running_var, double epsilon,
                                         StatMode mode) {
  const Layout l = layout_of(x, gamma.size());
  require(beta.size() == l.c && running_mean.size() == l.c && running_var.size() == l.c,
          ErrorCode::kShapeMismatch, "batchnorm parameters differ in channel count");

  BatchNormForward<Real> out;
  auto& cache = out.cache;
  cache.batch_stats = mode != StatMode::kFrozenSource;
  cache.mean.assign(l.c, 0.0);
  cache.var.assign(l.c, 0.0);
  cache.inv_std.assign(l.c, 0.0);

  const Real* px = x.raw();
  const double count = static_cast<double>(l.n * l.s);
  for (std::size_t c = 0; c < l.c; ++c) {
    double mean, var;
    if (cache.batch_stats) {
      double sum = 0.0;
      for (std::size_t n = 0; n < l.n; ++n) {
        const Real* row = px + (n * l.c + c) * l.s;
        for (std::size_t s = 0; s < l.s; ++s) sum += row[s];
      }
      mean = sum / count;
      double sq = 0.0;
      for (std::size_t n = 0; n < l.n; ++n) {
        const Real* row = px + (n * l.c + c) * l.s;
        for (std::size_t s = 0; s < l.s; ++s) {
          const double d = row[s] - mean;
          sq += d * d;
        }
      }
      var = sq / count;
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const double denom = var + epsilon;
    // NaN statistics propagate to the output; callers decide what to do.
    require(!(denom <= 0.0), ErrorCode::kNonFinite,
            "channel " + std::to_string(c) + " has zero variance and epsilon 0");
    cache.mean[c] = mean;
    cache.var[c] = var;
    cache.inv_std[c] = 1.0 / std::sqrt(denom);
  }

  out.y = Tensor<Real>(x.shape());
  cache.x_hat = Tensor<Real>(x.shape());
  Real* py = out.y.raw();
  Real* ph = cache.x_hat.raw();
  for (std::size_t n = 0; n < l.n; ++n) {
    for (std::size_t c = 0; c < l.c; ++c) {
      const std::size_t base = (n * l.c + c) * l.s;
      const Real mean = static_cast<Real>(cache.mean[c]);
      const Real inv = static_cast<Real>(cache.inv_std[c]);
      const Real g = gamma[c];
      const Real b = beta[c];
      for (std::size_t s = 0; s < l.s; ++s) {
        const Real h = (px[base + s] - mean) * inv;
        ph[base + s] = h;
        py[base + s] = h * g + b;
      }
    }
  }
  return out;
}

template <typename Real>
BatchNormResult<Real> batchnorm_apply(const Tensor<Real>& x, const BatchNormState<Real>& state,
                                      StatMode mode) {
  state.validate();
  auto fwd = batchnorm_forward(x, state.gamma, state.beta, state.running_mean,
                               state.running_var, state.epsilon, mode);
  BatchNormResult<Real> result{std::move(fwd.y), state};
  if (mode == StatMode::kTrainUpdate) {
    const std::size_t c = state.channels();
    Tensor<Real> mean({c}), var({c});
    for (std::size_t i = 0; i < c; ++i) {
      mean[i] = static_cast<Real>(fwd.cache.mean[i]);
      var[i] = static_cast<Real>(fwd.cache.var[i]);
    }
    result.state.running_mean = ema_update(state.running_mean, mean, state.stat_momentum);
    result.state.running_var = ema_update(state.running_var, var, state.stat_momentum);
  }
  return result;
}

template <typename Real>
BatchNormGrads<Real> batchnorm_backward(const Tensor<Real>& dy, const Tensor<Real>& gamma,
                                        const BatchNormCache<Real>& cache, bool need_dx) {
  require(dy.shape() == cache.x_hat.shape(), ErrorCode::kShapeMismatch,
          "batchnorm gradient shape " + shape_string(dy.shape()) + " vs cached " +
              shape_string(cache.x_hat.shape()));
  const Layout l = layout_of(dy, gamma.size());
  BatchNormGrads<Real> g;
  g.dgamma = Tensor<Real>({l.c});
  g.dbeta = Tensor<Real>({l.c});
  const Real* pdy = dy.raw();
  const Real* ph = cache.x_hat.raw();
  std::vector<double> sum_dy(l.c, 0.0), sum_dy_h(l.c, 0.0);
  for (std::size_t n = 0; n < l.n; ++n) {
    for (std::size_t c = 0; c < l.c; ++c) {
      const std::size_t base = (n * l.c + c) * l.s;
      double a = 0.0, b = 0.0;
      for (std::size_t s = 0; s < l.s; ++s) {
        a += pdy[base + s];
        b += static_cast<double>(pdy[base + s]) * ph[base + s];
      }
      sum_dy[c] += a;
      sum_dy_h[c] += b;
    }
  }
  for (std::size_t c = 0; c < l.c; ++c) {
    g.dbeta[c] = static_cast<Real>(sum_dy[c]);
    g.dgamma[c] = static_cast<Real>(sum_dy_h[c]);
  }
  if (!need_dx) return g;

  g.dx = Tensor<Real>(dy.shape());
  Real* pdx = g.dx.raw();
  const double count = static_cast<double>(l.n * l.s);
  for (std::size_t n = 0; n < l.n; ++n) {
    for (std::size_t c = 0; c < l.c; ++c) {
      const std::size_t base = (n * l.c + c) * l.s;
      const Real scale = static_cast<Real>(gamma[c] * cache.inv_std[c]);
      if (cache.batch_stats) {
        const Real mean_dy = static_cast<Real>(sum_dy[c] / count);
        const Real mean_dy_h = static_cast<Real>(sum_dy_h[c] / count);
        for (std::size_t s = 0; s < l.s; ++s)
          pdx[base + s] = scale * (pdy[base + s] - mean_dy - ph[base + s] * mean_dy_h);
      } else {
        for (std::size_t s = 0; s < l.s; ++s) pdx[base + s] = scale * pdy[base + s];
      }
    }
  }
  return g;
}

#define CTA_INSTANTIATE(Real)                                                                \
  template struct BatchNormState<Real>;                                                      \
  template BatchNormForward<Real> batchnorm_forward(                                         \
      const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&,    \
      const Tensor<Real>&, double, StatMode);                                                \
  template BatchNormResult<Real> batchnorm_apply(const Tensor<Real>&,                        \
                                                 const BatchNormState<Real>&, StatMode);     \
  template BatchNormGrads<Real> batchnorm_backward(const Tensor<Real>&, const Tensor<Real>&, \
                                                   const BatchNormCache<Real>&, bool);

CTA_INSTANTIATE(float)
CTA_INSTANTIATE(double)
#undef CTA_INSTANTIATE

}  // namespace cta
