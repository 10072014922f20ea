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

#include "cta/numerics.hpp"

#include <cmath>

#include "cta/error.hpp"

namespace cta {

namespace {

void check_alpha(double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::kOutOfRange,
          "ema alpha " + std::to_string(alpha) + " outside [0, 1]");
}

}  // namespace

template <typename Real>
Tensor<Real> ema_update(const Tensor<Real>& old, const Tensor<Real>& fresh, double alpha) {
  Tensor<Real> out = old;
  ema_update_inplace(out, fresh, alpha);
  return out;
}

template <typename Real>
void ema_update_inplace(Tensor<Real>& old, const Tensor<Real>& fresh, double alpha) {
  check_alpha(alpha);
  require(old.shape() == fresh.shape(), ErrorCode::kShapeMismatch,
          "ema of " + shape_string(old.shape()) + " and " + shape_string(fresh.shape()));
  // The endpoints are exact so that alpha = 1 and alpha = 0 copy bit for bit.
  if (alpha == 1.0) return;
  if (alpha == 0.0) {
    old = fresh;
    return;
  }
  // Accumulating in double keeps float results inside [min(old, new), max(old, new)].
  const double b = 1.0 - alpha;
  Real* po = old.raw();
  const Real* pf = fresh.raw();
  for (std::size_t i = 0; i < old.size(); ++i)
    po[i] = static_cast<Real>(alpha * static_cast<double>(po[i]) + b * static_cast<double>(pf[i]));
}

template <typename Real>
std::vector<double> row_entropies(const Tensor<Real>& probs) {
  require(probs.rank() == 2, ErrorCode::kShapeMismatch,
          "entropy expects N x n probabilities, got " + shape_string(probs.shape()));
  const std::size_t rows = probs.dim(0), cols = probs.dim(1);
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0, h = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double p = probs[r * cols + c];
      require(p >= 0.0, ErrorCode::kInvalidArgument,
              "negative probability in row " + std::to_string(r));
      sum += p;
      if (p > 0.0) h -= p * std::log(p);
    }
    require(std::abs(sum - 1.0) <= kProbabilitySumTolerance, ErrorCode::kInvalidArgument,
            "row " + std::to_string(r) + " sums to " + std::to_string(sum));
    out[r] = h;
  }
  return out;
}

template <typename Real>
double shannon_entropy(const Tensor<Real>& probs) {
  const auto rows = row_entropies(probs);
  require(!rows.empty(), ErrorCode::kInvalidArgument, "entropy of an empty batch");
  double total = 0.0;
  for (double h : rows) total += h;
  return total / static_cast<double>(rows.size());
}

template Tensor<float> ema_update(const Tensor<float>&, const Tensor<float>&, double);
template Tensor<double> ema_update(const Tensor<double>&, const Tensor<double>&, double);
template void ema_update_inplace(Tensor<float>&, const Tensor<float>&, double);
template void ema_update_inplace(Tensor<double>&, const Tensor<double>&, double);
template double shannon_entropy(const Tensor<float>&);
template double shannon_entropy(const Tensor<double>&);
template std::vector<double> row_entropies(const Tensor<float>&);
template std::vector<double> row_entropies(const Tensor<double>&);

}  // namespace cta
