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

#pragma once

#include <string_view>

#include "cta/tensor.hpp"

namespace cta {

// Where normalization statistics come from during a forward pass.
enum class StatMode {
  kTrainUpdate,   // batch statistics; running statistics advanced by EMA
  kFrozenSource,  // running statistics estimated during source training
  kTestBatch,     // batch statistics; running statistics untouched
};

std::string_view to_string(StatMode mode);

inline constexpr double kDefaultBnEpsilon = 1e-5;
inline constexpr double kDefaultStatMomentum = 0.9;

template <typename Real>
struct BatchNormState {
  Tensor<Real> gamma;
  Tensor<Real> beta;
  Tensor<Real> running_mean;
  Tensor<Real> running_var;
  double epsilon = kDefaultBnEpsilon;
  // Weight on the old running value: running <- m * running + (1 - m) * batch.
  double stat_momentum = kDefaultStatMomentum;

  static BatchNormState identity(std::size_t channels);
  std::size_t channels() const { return gamma.size(); }
  void validate() const;
};

template <typename Real>
struct BatchNormResult {
  Tensor<Real> y;
  BatchNormState<Real> state;
};

// y = (x - mean) / sqrt(var + eps) * gamma + beta per channel, for x of shape
// N x C or N x C x H x W. Variance is the population (biased) variance.
template <typename Real>
BatchNormResult<Real> batchnorm_apply(const Tensor<Real>& x, const BatchNormState<Real>& state,
                                      StatMode mode);

// Intermediate values kept for the backward pass.
template <typename Real>
struct BatchNormCache {
  Tensor<Real> x_hat;
  std::vector<double> mean;
  std::vector<double> var;      // population variance of the batch or running var
  std::vector<double> inv_std;  // 1 / sqrt(var + eps)
  bool batch_stats = false;
};

template <typename Real>
struct BatchNormForward {
  Tensor<Real> y;
  BatchNormCache<Real> cache;
};

template <typename Real>
BatchNormForward<Real> batchnorm_forward(const Tensor<Real>& x, const Tensor<Real>& gamma,
                                         const Tensor<Real>& beta,
                                         const Tensor<Real>& running_mean,
                                         const Tensor<Real>& running_var, double epsilon,
                                         StatMode mode);

template <typename Real>
struct BatchNormGrads {
  Tensor<Real> dx;
  Tensor<Real> dgamma;
  Tensor<Real> dbeta;
};

// Gradients flow through the batch statistics when they were used.
template <typename Real>
BatchNormGrads<Real> batchnorm_backward(const Tensor<Real>& dy, const Tensor<Real>& gamma,
                                        const BatchNormCache<Real>& cache, bool need_dx = true);

}  // namespace cta
