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

#include "cta/optim.hpp"

#include <cmath>

#include "cta/error.hpp"

namespace cta {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind optimizer_kind_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  fail(ErrorCode::kInvalidArgument, "unknown optimizer '" + std::string(name) + "'");
}

void OptimizerConfig::validate() const {
  require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorCode::kOutOfRange,
          "learning rate must be finite and >= 0");
  require(momentum >= 0.0 && momentum < 1.0, ErrorCode::kOutOfRange, "momentum outside [0, 1)");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorCode::kOutOfRange,
          "adam betas outside [0, 1)");
  require(epsilon > 0.0, ErrorCode::kOutOfRange, "adam epsilon must be > 0");
}

template <typename Real>
void optimizer_step(ParamStore<Real>& params, const ParamStore<Real>& grads,
                    OptimizerState<Real>& opt, RoleMask mask) {
  const auto& cfg = opt.config;
  cfg.validate();
  for (const auto& e : params.entries()) {
    if (!mask.contains(e.role)) continue;
    require(grads.contains(e.name), ErrorCode::kMissingGradient,
            "no gradient for parameter '" + e.name + "'");
    require(grads.at(e.name).shape() == e.value.shape(), ErrorCode::kShapeMismatch,
            "gradient shape for '" + e.name + "'");
  }
  ++opt.step;
  const double t = static_cast<double>(opt.step);
  for (auto& e : params.entries()) {
    if (!mask.contains(e.role)) continue;
    const Tensor<Real>& g = grads.at(e.name);
    Tensor<Real>& p = e.value;
    auto& m = opt.first_moment.try_emplace(e.name, Tensor<Real>(p.shape())).first->second;
    if (cfg.kind == OptimizerKind::kSgd) {
      const Real mu = static_cast<Real>(cfg.momentum);
      const Real lr = static_cast<Real>(cfg.learning_rate);
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = mu * m[i] + g[i];
        p[i] -= lr * m[i];
      }
    } else {
      auto& v = opt.second_moment.try_emplace(e.name, Tensor<Real>(p.shape())).first->second;
      const double b1 = cfg.beta1, b2 = cfg.beta2;
      const double c1 = 1.0 - std::pow(b1, t);
      const double c2 = 1.0 - std::pow(b2, t);
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = g[i];
        const double mi = b1 * m[i] + (1.0 - b1) * gi;
        const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
        m[i] = static_cast<Real>(mi);
        v[i] = static_cast<Real>(vi);
        const double update = cfg.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + cfg.epsilon);
        p[i] = static_cast<Real>(p[i] - update);
      }
    }
  }
}

template void optimizer_step(ParamStore<float>&, const ParamStore<float>&,
                             OptimizerState<float>&, RoleMask);
template void optimizer_step(ParamStore<double>&, const ParamStore<double>&,
                             OptimizerState<double>&, RoleMask);

}  // namespace cta
