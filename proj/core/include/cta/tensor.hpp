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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cta {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array. Real is float for the model path and double for
// gradient checking; both are explicitly instantiated in tensor.cpp.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real{0});
  Tensor(Shape shape, std::vector<Real> values);

  static Tensor from(std::initializer_list<Real> values) {
    return Tensor(Shape{values.size()}, std::vector<Real>(values));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real* raw() { return data_.data(); }
  const Real* raw() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }
  const std::vector<Real>& storage() const { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  const Real& operator[](std::size_t i) const { return data_[i]; }

  // Same data under a new shape with an equal element count.
  Tensor reshaped(Shape shape) const;
  void fill(Real value);
  bool all_finite() const;

  template <typename Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return Tensor<Other>(shape_, std::move(out));
  }

  // Value equality (shape and every element).
  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

// Bitwise equality, distinguishing -0.0 from 0.0 and comparing NaN payloads.
template <typename Real>
bool bit_identical(const Tensor<Real>& a, const Tensor<Real>& b);

template <typename Real>
double max_abs_diff(const Tensor<Real>& a, const Tensor<Real>& b);

}  // namespace cta
