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

#include "cta/param_store.hpp"

#include <cstring>

#include "cta/error.hpp"

namespace cta {

std::string_view to_string(ParamRole role) {
  switch (role) {
    case ParamRole::kWeight: return "weight";
    case ParamRole::kBias: return "bias";
    case ParamRole::kBnAffine: return "bn-affine";
    case ParamRole::kBnStat: return "bn-stat";
  }
  return "unknown";
}

ParamRole param_role_from_string(std::string_view name) {
  if (name == "weight") return ParamRole::kWeight;
  if (name == "bias") return ParamRole::kBias;
  if (name == "bn-affine") return ParamRole::kBnAffine;
  if (name == "bn-stat") return ParamRole::kBnStat;
  fail(ErrorCode::kFormat, "unknown parameter role '" + std::string(name) + "'");
}

template <typename Real>
void ParamStore<Real>::add(std::string name, ParamRole role, Tensor<Real> value) {
  require(!contains(name), ErrorCode::kInvalidArgument, "duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), role, std::move(value)});
}

template <typename Real>
bool ParamStore<Real>::contains(std::string_view name) const {
  return index_.find(name) != index_.end();
}

template <typename Real>
std::size_t ParamStore<Real>::index_of(std::string_view name) const {
  auto it = index_.find(name);
  require(it != index_.end(), ErrorCode::kNotFound,
          "no parameter named '" + std::string(name) + "'");
  return it->second;
}

template <typename Real>
Tensor<Real>& ParamStore<Real>::at(std::string_view name) {
  return entries_[index_of(name)].value;
}

template <typename Real>
const Tensor<Real>& ParamStore<Real>::at(std::string_view name) const {
  return entries_[index_of(name)].value;
}

template <typename Real>
ParamRole ParamStore<Real>::role(std::string_view name) const {
  return entries_[index_of(name)].role;
}

template <typename Real>
std::size_t ParamStore<Real>::scalar_count() const {
  return scalar_count(RoleMask::all());
}

template <typename Real>
std::size_t ParamStore<Real>::scalar_count(RoleMask mask) const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (mask.contains(e.role)) n += e.value.size();
  return n;
}

template <typename Real>
ParamStore<Real> ParamStore<Real>::zeros_like(RoleMask mask) const {
  ParamStore out;
  for (const auto& e : entries_)
    if (mask.contains(e.role)) out.add(e.name, e.role, Tensor<Real>(e.value.shape()));
  return out;
}

template <typename Real>
bool bit_identical(const ParamStore<Real>& a, const ParamStore<Real>& b, RoleMask mask) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& ea = a.entries()[i];
    const auto& eb = b.entries()[i];
    if (ea.name != eb.name || ea.role != eb.role) return false;
    if (mask.contains(ea.role) && !bit_identical(ea.value, eb.value)) return false;
  }
  return true;
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

}  // namespace

template <typename Real>
std::uint64_t content_hash(const ParamStore<Real>& store) {
  std::uint64_t h = kFnvOffset;
  for (const auto& e : store.entries()) {
    fnv(h, e.name.data(), e.name.size());
    fnv(h, &e.role, sizeof(e.role));
    for (auto d : e.value.shape()) fnv(h, &d, sizeof(d));
    fnv(h, e.value.raw(), e.value.size() * sizeof(Real));
  }
  return h;
}

template class ParamStore<float>;
template class ParamStore<double>;
template bool bit_identical(const ParamStore<float>&, const ParamStore<float>&, RoleMask);
template bool bit_identical(const ParamStore<double>&, const ParamStore<double>&, RoleMask);
template std::uint64_t content_hash(const ParamStore<float>&);
template std::uint64_t content_hash(const ParamStore<double>&);

}  // namespace cta
