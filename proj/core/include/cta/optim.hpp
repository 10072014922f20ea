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

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "cta/param_store.hpp"

namespace cta {

enum class OptimizerKind { kSgd, kAdam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double learning_rate = 1e-3;
  double momentum = 0.9;  // SGD
  double beta1 = 0.9;     // Adam
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

template <typename Real>
struct OptimizerState {
  OptimizerConfig config;
  std::map<std::string, Tensor<Real>, std::less<>> first_moment;
  std::map<std::string, Tensor<Real>, std::less<>> second_moment;
  std::int64_t step = 0;

  OptimizerState() = default;
  explicit OptimizerState(OptimizerConfig cfg) : config(cfg) {}

  bool operator==(const OptimizerState& other) const {
    return step == other.step && first_moment == other.first_moment &&
           second_moment == other.second_moment;
  }
};

// Advances every parameter whose role is in mask. Entries outside the mask
// are not touched. SGD follows v <- mu v + g, p <- p - lr v; Adam uses bias
// corrected moments.
template <typename Real>
void optimizer_step(ParamStore<Real>& params, const ParamStore<Real>& grads,
                    OptimizerState<Real>& opt, RoleMask mask);

}  // namespace cta
