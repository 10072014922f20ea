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

#include "cta/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cta/error.hpp"
#include "cta/rng.hpp"

namespace cta {

GradCheckReport gradient_check(const LossFunction& fn, const ParamStore<double>& params,
                               const GradCheckOptions& options) {
  require(options.step > 0.0, ErrorCode::kInvalidArgument, "finite-difference step must be > 0");
  const LossAndGrad base = fn(params);
  require(std::isfinite(base.loss), ErrorCode::kNonFinite, "loss is not finite");

  GradCheckReport report;
  ParamStore<double> probe = params;
  Rng rng(options.seed);
  for (const auto& entry : base.grads.entries()) {
    require(params.contains(entry.name), ErrorCode::kNotFound,
            "gradient for unknown parameter '" + entry.name + "'");
    Tensor<double>& value = probe.at(entry.name);
    require(value.shape() == entry.value.shape(), ErrorCode::kShapeMismatch,
            "gradient shape for '" + entry.name + "'");

    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.max_coords_per_param) {
      rng.shuffle(coords.begin(), coords.end());
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }

    for (std::size_t i : coords) {
      const double saved = value[i];
      value[i] = saved + options.step;
      const double plus = fn(probe).loss;
      value[i] = saved - options.step;
      const double minus = fn(probe).loss;
      value[i] = saved;
      require(std::isfinite(plus) && std::isfinite(minus), ErrorCode::kNonFinite,
              "loss is not finite near '" + entry.name + "'[" + std::to_string(i) + "]");
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double analytic = entry.value[i];
      const bool both_zero = std::abs(analytic) <= options.zero_tolerance &&
                             std::abs(numeric) <= options.zero_tolerance;
      const double rel =
          both_zero ? 0.0
                    : std::abs(analytic - numeric) /
                          std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++report.coords_checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_param = entry.name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace cta
