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

#include "cta/tensor.hpp"

namespace cta {

// alpha * old + (1 - alpha) * fresh, elementwise.
template <typename Real>
Tensor<Real> ema_update(const Tensor<Real>& old, const Tensor<Real>& fresh, double alpha);

// In-place form used on parameter stores.
template <typename Real>
void ema_update_inplace(Tensor<Real>& old, const Tensor<Real>& fresh, double alpha);

inline constexpr double kProbabilitySumTolerance = 1e-5;

// Mean over rows of -sum_i p_i ln p_i, with 0 ln 0 = 0.
template <typename Real>
double shannon_entropy(const Tensor<Real>& probs);

// Per-row entropies, same conventions as shannon_entropy.
template <typename Real>
std::vector<double> row_entropies(const Tensor<Real>& probs);

}  // namespace cta
