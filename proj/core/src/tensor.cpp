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

#include "cta/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "cta/error.hpp"

namespace cta {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, Real fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  require(shape_numel(shape_) == data_.size(), ErrorCode::kShapeMismatch,
          "tensor of shape " + shape_string(shape_) + " cannot hold " +
              std::to_string(data_.size()) + " values");
}

template <typename Real>
std::size_t Tensor<Real>::dim(std::size_t axis) const {
  require(axis < shape_.size(), ErrorCode::kOutOfRange,
          "axis " + std::to_string(axis) + " of rank-" + std::to_string(shape_.size()) +
              " tensor");
  return shape_[axis];
}

template <typename Real>
Tensor<Real> Tensor<Real>::reshaped(Shape shape) const {
  require(shape_numel(shape) == data_.size(), ErrorCode::kShapeMismatch,
          "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  return Tensor(std::move(shape), data_);
}

template <typename Real>
void Tensor<Real>::fill(Real value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename Real>
bool Tensor<Real>::all_finite() const {
  for (auto v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

template <typename Real>
bool bit_identical(const Tensor<Real>& a, const Tensor<Real>& b) {
  return a.shape() == b.shape() &&
         (a.size() == 0 || std::memcmp(a.raw(), b.raw(), a.size() * sizeof(Real)) == 0);
}

template <typename Real>
double max_abs_diff(const Tensor<Real>& a, const Tensor<Real>& b) {
  require(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
          shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

template class Tensor<float>;
template class Tensor<double>;
template bool bit_identical(const Tensor<float>&, const Tensor<float>&);
template bool bit_identical(const Tensor<double>&, const Tensor<double>&);
template double max_abs_diff(const Tensor<float>&, const Tensor<float>&);
template double max_abs_diff(const Tensor<double>&, const Tensor<double>&);

}  // namespace cta
