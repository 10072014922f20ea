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
#include <functional>
#include <string>

#include "cta/param_store.hpp"

namespace cta {

struct LossAndGrad {
  double loss = 0.0;
  ParamStore<double> grads;  // entries present here are the ones checked
};

struct GradCheckOptions {
  double step = 1e-5;
  std::size_t max_coords_per_param = 64;
  std::uint64_t seed = 0;
  // Coordinates where both gradients are below this magnitude agree: a true
  // zero gradient (e.g. a bias feeding batch statistics) only leaves
  // rounding noise in the difference quotient.
  double zero_tolerance = 1e-9;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
};

using LossFunction = std::function<LossAndGrad(const ParamStore<double>&)>;

// Compares analytic gradients against central differences. Parameters with
// more than max_coords_per_param scalars are sampled with a seeded generator.
// Relative error is |a - n| / max(1e-8, |a| + |n|), or 0 where both
// gradients are below zero_tolerance.
GradCheckReport gradient_check(const LossFunction& fn, const ParamStore<double>& params,
                               const GradCheckOptions& options = {});

}  // namespace cta
