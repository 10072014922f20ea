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

#include <span>
#include <vector>

#include "cta/tensor.hpp"

namespace cta {

// Dense (affine) layer: y[n, o] = sum_i x[n, i] * w[o, i] + b[o].
template <typename Real>
Tensor<Real> dense_forward(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>& b);

template <typename Real>
struct DenseGrads {
  Tensor<Real> dx;
  Tensor<Real> dw;
  Tensor<Real> db;
};

template <typename Real>
DenseGrads<Real> dense_backward(const Tensor<Real>& x, const Tensor<Real>& w,
                                const Tensor<Real>& dy, bool need_dx = true,
                                bool need_params = true);

// Stride-1 convolution with zero padding kernel/2 on each side, so spatial
// size is preserved. x: N x C x H x W, w: OC x C x K x K (K odd), b: OC.
template <typename Real>
Tensor<Real> conv2d_forward(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>& b);

template <typename Real>
struct Conv2dGrads {
  Tensor<Real> dx;
  Tensor<Real> dw;
  Tensor<Real> db;
};

template <typename Real>
Conv2dGrads<Real> conv2d_backward(const Tensor<Real>& x, const Tensor<Real>& w,
                                  const Tensor<Real>& dy, bool need_dx = true,
                                  bool need_params = true);

template <typename Real>
Tensor<Real> relu_forward(const Tensor<Real>& x);

template <typename Real>
Tensor<Real> relu_backward(const Tensor<Real>& x, const Tensor<Real>& dy);

// Non-overlapping average pooling with a square window; H and W must divide.
template <typename Real>
Tensor<Real> avgpool_forward(const Tensor<Real>& x, std::size_t window);

template <typename Real>
Tensor<Real> avgpool_backward(const Shape& input_shape, const Tensor<Real>& dy,
                              std::size_t window);

// Row-wise softmax of an N x n matrix.
template <typename Real>
Tensor<Real> softmax_forward(const Tensor<Real>& logits);

// Given p = softmax(z) and dL/dp, returns dL/dz.
template <typename Real>
Tensor<Real> softmax_backward(const Tensor<Real>& probs, const Tensor<Real>& dprobs);

template <typename Real>
Tensor<Real> log_softmax(const Tensor<Real>& logits);

// Soft cross-entropy H(t, p) = -sum_i t_i ln p_i averaged over rows.
template <typename Real>
double soft_cross_entropy(const Tensor<Real>& target, const Tensor<Real>& pred);

template <typename Real>
struct SoftCrossEntropyGrads {
  Tensor<Real> dtarget;
  Tensor<Real> dpred;
};

template <typename Real>
SoftCrossEntropyGrads<Real> soft_cross_entropy_backward(const Tensor<Real>& target,
                                                        const Tensor<Real>& pred);

// Loss/gradient pairs taken directly on logits (numerically stable forms).
template <typename Real>
struct LogitLoss {
  double loss = 0.0;
  Tensor<Real> dlogits;
};

// Mean hard-label cross-entropy of softmax(logits).
template <typename Real>
LogitLoss<Real> cross_entropy_with_logits(const Tensor<Real>& logits, std::span<const int> labels);

// Mean entropy of softmax(logits).
template <typename Real>
LogitLoss<Real> entropy_with_logits(const Tensor<Real>& logits);

// Mean soft cross-entropy H(target, softmax(logits)); target rows sum to 1.
template <typename Real>
LogitLoss<Real> soft_cross_entropy_with_logits(const Tensor<Real>& target,
                                               const Tensor<Real>& logits);

// Row argmax, ties to the lowest index.
template <typename Real>
std::vector<int> argmax_rows(const Tensor<Real>& matrix);

}  // namespace cta
