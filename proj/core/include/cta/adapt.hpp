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
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "cta/error.hpp"
#include "cta/model.hpp"
#include "cta/optim.hpp"
#include "cta/rng.hpp"

namespace cta {

enum class AdaptMethod { kSource, kBn, kTent, kCotta };

std::string_view to_string(AdaptMethod method);
AdaptMethod adapt_method_from_string(std::string_view name);

struct AdapterConfig {
  AdaptMethod method = AdaptMethod::kBn;
  double learning_rate = 0.0;  // required > 0 for TENT and CoTTA
  double cotta_alpha = 0.99;   // teacher <- alpha * teacher + (1 - alpha) * student
  double restore_prob = 0.01;  // per-scalar probability of resetting to source
  // TENT defaults to Adam, CoTTA to SGD with momentum 0.9.
  std::optional<OptimizerKind> optimizer;
  std::uint64_t seed = 0;

  OptimizerKind effective_optimizer() const;
  void validate() const;
  std::string label() const;
};

// Result of feeding one batch to an adapter.
struct StepOutcome {
  Tensor<float> probs;      // predictions made before any update
  double loss = 0.0;        // adaptation objective; 0 for Source/BN
  bool updated = false;     // false for Source/BN, and for skipped steps
  std::size_t restored = 0; // CoTTA scalars reset to source this step
  std::optional<Error> error;  // set when the step was skipped (non-finite loss)
};

// Persistent adaptation state. One instance lives for a whole continual
// stream; reset() exists for completeness and is not used by the protocols.
class Adapter {
 public:
  Adapter(const Model<float>& model, AdapterConfig config);

  const AdapterConfig& config() const { return config_; }
  AdaptMethod method() const { return config_.method; }
  const ModelSpec& spec() const { return spec_; }

  // Inference path of the method without touching any state. Source uses
  // frozen statistics; every other method uses the batch's own statistics,
  // through the teacher for CoTTA.
  Tensor<float> infer(const Tensor<float>& images) const;

  // One online step: Source/BN infer, TENT/CoTTA infer then update.
  StepOutcome step(const Tensor<float>& images);

  void reset();

  const ParamStore<float>& student() const { return student_; }
  const ParamStore<float>& teacher() const { return teacher_; }
  const ParamStore<float>& snapshot() const { return *snapshot_; }
  const OptimizerState<float>& optimizer() const { return optimizer_; }
  std::int64_t step_count() const { return steps_; }

  // Hash over every mutable field (parameters, moments, counters, RNG).
  std::uint64_t state_hash() const;

 private:
  friend Tensor<float> predict_bn(const Adapter&, const Tensor<float>&);
  friend StepOutcome step_tent(Adapter&, const Tensor<float>&);
  friend StepOutcome step_cotta(Adapter&, const Tensor<float>&);

  void check_batch(const Tensor<float>& images) const;

  AdapterConfig config_;
  ModelSpec spec_;
  std::shared_ptr<const ParamStore<float>> snapshot_;
  ParamStore<float> student_;
  ParamStore<float> teacher_;  // CoTTA only; empty otherwise
  OptimizerState<float> optimizer_;
  std::int64_t steps_ = 0;
  Rng restore_rng_;
};

// Throws kInvalidArgument if the model has no batchnorm layer.
Adapter make_adapter(const Model<float>& model, const AdapterConfig& config);

// Batch-statistics inference with the source parameters; never mutates.
Tensor<float> predict_bn(const Adapter& adapter, const Tensor<float>& images);

StepOutcome step_tent(Adapter& adapter, const Tensor<float>& images);
StepOutcome step_cotta(Adapter& adapter, const Tensor<float>& images);

inline constexpr std::size_t kMinAdaptBatch = 2;

template <typename Real>
struct Objective {
  double loss = 0.0;
  ParamStore<Real> grads;
  Tensor<Real> probs;
};

// Mean prediction entropy under batch statistics; gradients w.r.t. the
// batchnorm affine parameters only.
template <typename Real>
Objective<Real> tent_objective(const ModelSpec& spec, const ParamStore<Real>& params,
                               const Tensor<Real>& images);

// Mean soft cross-entropy H(teacher_probs, student); gradients w.r.t. every
// parameter except batchnorm statistics.
template <typename Real>
Objective<Real> cotta_objective(const ModelSpec& spec, const ParamStore<Real>& student,
                                const Tensor<Real>& teacher_probs, const Tensor<Real>& images);

}  // namespace cta
