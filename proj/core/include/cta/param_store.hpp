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
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cta/tensor.hpp"

namespace cta {

enum class ParamRole : std::uint8_t { kWeight, kBias, kBnAffine, kBnStat };

std::string_view to_string(ParamRole role);
ParamRole param_role_from_string(std::string_view name);

// Set of parameter roles, e.g. "everything except bn-stat".
class RoleMask {
 public:
  constexpr RoleMask() = default;
  constexpr RoleMask(std::initializer_list<ParamRole> roles) {
    for (auto r : roles) bits_ |= bit(r);
  }

  static constexpr RoleMask all() { return RoleMask{0x0F}; }
  static constexpr RoleMask none() { return RoleMask{}; }
  static constexpr RoleMask bn_affine() { return RoleMask{ParamRole::kBnAffine}; }
  static constexpr RoleMask trainable() {
    return RoleMask{ParamRole::kWeight, ParamRole::kBias, ParamRole::kBnAffine};
  }

  constexpr bool contains(ParamRole role) const { return (bits_ & bit(role)) != 0; }
  constexpr bool operator==(const RoleMask&) const = default;

 private:
  constexpr explicit RoleMask(std::uint8_t bits) : bits_(bits) {}
  static constexpr std::uint8_t bit(ParamRole r) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(r));
  }
  std::uint8_t bits_ = 0;
};

template <typename Real>
struct ParamEntry {
  std::string name;
  ParamRole role;
  Tensor<Real> value;

  bool operator==(const ParamEntry&) const = default;
};

// Ordered, uniquely named tensors. Iteration follows insertion order, which
// is the layer order of the owning model.
template <typename Real>
class ParamStore {
 public:
  void add(std::string name, ParamRole role, Tensor<Real> value);

  bool contains(std::string_view name) const;
  Tensor<Real>& at(std::string_view name);
  const Tensor<Real>& at(std::string_view name) const;
  ParamRole role(std::string_view name) const;

  std::vector<ParamEntry<Real>>& entries() { return entries_; }
  const std::vector<ParamEntry<Real>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  std::size_t scalar_count(RoleMask mask) const;

  // Zero tensors matching every entry selected by mask.
  ParamStore zeros_like(RoleMask mask = RoleMask::all()) const;

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (const auto& e : entries_) out.add(e.name, e.role, e.value.template cast<Other>());
    return out;
  }

  bool operator==(const ParamStore& other) const { return entries_ == other.entries_; }

 private:
  std::size_t index_of(std::string_view name) const;

  std::vector<ParamEntry<Real>> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// True when both stores hold the same names and bit-identical tensors,
// restricted to entries whose role is in mask.
template <typename Real>
bool bit_identical(const ParamStore<Real>& a, const ParamStore<Real>& b,
                   RoleMask mask = RoleMask::all());

// FNV-1a over names, roles, shapes and raw bytes; used to detect mutation.
template <typename Real>
std::uint64_t content_hash(const ParamStore<Real>& store);

}  // namespace cta
