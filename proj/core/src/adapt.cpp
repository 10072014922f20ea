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

#include "cta/adapt.hpp"

#include <cmath>

#include "cta/layers.hpp"
#include "cta/numerics.hpp"

namespace cta {

std::string_view to_string(AdaptMethod method) {
  switch (method) {
    case AdaptMethod::kSource: return "source";
    case AdaptMethod::kBn: return "bn";
    case AdaptMethod::kTent: return "tent";
    case AdaptMethod::kCotta: return "cotta";
  }
  return "unknown";
}

AdaptMethod adapt_method_from_string(std::string_view name) {
  for (auto m : {AdaptMethod::kSource, AdaptMethod::kBn, AdaptMethod::kTent, AdaptMethod::kCotta})
    if (to_string(m) == name) return m;
  fail(ErrorCode::kInvalidArgument,
       "unknown adaptation method '" + std::string(name) + "' (source, bn, tent, cotta)");
}

OptimizerKind AdapterConfig::effective_optimizer() const {
  if (optimizer) return *optimizer;
  return method == AdaptMethod::kCotta ? OptimizerKind::kSgd : OptimizerKind::kAdam;
}

void AdapterConfig::validate() const {
  const bool learns = method == AdaptMethod::kTent || method == AdaptMethod::kCotta;
  if (learns) {
    require(std::isfinite(learning_rate) && learning_rate >= 0.0, ErrorCode::kOutOfRange,
            "learning_rate must be a finite value >= 0, got " + std::to_string(learning_rate));
  }
  if (method == AdaptMethod::kCotta) {
    require(cotta_alpha >= 0.0 && cotta_alpha <= 1.0, ErrorCode::kOutOfRange,
            "cotta_alpha must lie in [0, 1], got " + std::to_string(cotta_alpha));
    require(restore_prob >= 0.0 && restore_prob <= 1.0, ErrorCode::kOutOfRange,
            "restore_prob must lie in [0, 1], got " + std::to_string(restore_prob));
  }
}

std::string AdapterConfig::label() const {
  switch (method) {
    case AdaptMethod::kSource: return "Source";
    case AdaptMethod::kBn: return "BN";
    case AdaptMethod::kTent: return "TENT";
    case AdaptMethod::kCotta: return "CoTTA";
  }
  return "unknown";
}

namespace {

template <typename Real>
Tensor<Real> infer_probs(const ModelSpec& spec, const ParamStore<Real>& params,
                         const Tensor<Real>& images, StatMode mode) {
  return softmax_forward(network_forward(spec, params, images, mode, false).logits);
}

template <typename Real>
bool all_finite(const ParamStore<Real>& store) {
  for (const auto& e : store.entries())
    if (!e.value.all_finite()) return false;
  return true;
}

void mix_into(std::uint64_t& h, std::uint64_t v) { h = mix64(h ^ v); }

}  // namespace

Adapter::Adapter(const Model<float>& model, AdapterConfig config)
    : config_(config),
      spec_(model.spec),
      snapshot_(std::make_shared<const ParamStore<float>>(model.params)),
      student_(model.params),
      restore_rng_(derive_seed({config.seed, 0xC077A})) {
  config_.validate();
  OptimizerConfig opt;
  opt.kind = config_.effective_optimizer();
  opt.learning_rate = config_.learning_rate;
  optimizer_ = OptimizerState<float>(opt);
  if (config_.method == AdaptMethod::kCotta) teacher_ = model.params;
}

void Adapter::check_batch(const Tensor<float>& images) const {
  check_input_shape(spec_, images);
  if (config_.method != AdaptMethod::kSource) {
    require(images.dim(0) >= kMinAdaptBatch, ErrorCode::kInvalidArgument,
            "batch of " + std::to_string(images.dim(0)) +
                " sample(s) is too small for batch statistics; use a batch size of at least " +
                std::to_string(kMinAdaptBatch) + " (larger batches estimate them better)");
  }
}

Tensor<float> Adapter::infer(const Tensor<float>& images) const {
  check_batch(images);
  switch (config_.method) {
    case AdaptMethod::kSource:
      return infer_probs(spec_, student_, images, StatMode::kFrozenSource);
    case AdaptMethod::kBn:
    case AdaptMethod::kTent:
      return infer_probs(spec_, student_, images, StatMode::kTestBatch);
    case AdaptMethod::kCotta:
      return infer_probs(spec_, teacher_, images, StatMode::kTestBatch);
  }
  fail(ErrorCode::kInvalidArgument, "unknown adaptation method");
}

StepOutcome Adapter::step(const Tensor<float>& images) {
  switch (config_.method) {
    case AdaptMethod::kSource: {
      StepOutcome out;
      out.probs = infer(images);
      ++steps_;
      return out;
    }
    case AdaptMethod::kBn: {
      StepOutcome out;
      out.probs = predict_bn(*this, images);
      ++steps_;
      return out;
    }
    case AdaptMethod::kTent: return step_tent(*this, images);
    case AdaptMethod::kCotta: return step_cotta(*this, images);
  }
  fail(ErrorCode::kInvalidArgument, "unknown adaptation method");
}

void Adapter::reset() {
  student_ = *snapshot_;
  if (config_.method == AdaptMethod::kCotta) teacher_ = *snapshot_;
  optimizer_ = OptimizerState<float>(optimizer_.config);
  steps_ = 0;
  restore_rng_ = Rng(derive_seed({config_.seed, 0xC077A}));
}

std::uint64_t Adapter::state_hash() const {
  std::uint64_t h = content_hash(student_);
  mix_into(h, content_hash(teacher_));
  auto hash_moments = [&h](const auto& moments) {
    for (const auto& [name, tensor] : moments) {
      ParamStore<float> wrap;
      wrap.add(name, ParamRole::kWeight, tensor);
      mix_into(h, content_hash(wrap));
    }
  };
  hash_moments(optimizer_.first_moment);
  hash_moments(optimizer_.second_moment);
  mix_into(h, static_cast<std::uint64_t>(optimizer_.step));
  mix_into(h, static_cast<std::uint64_t>(steps_));
  Rng probe = restore_rng_;
  mix_into(h, probe.next_u64());
  return h;
}

Adapter make_adapter(const Model<float>& model, const AdapterConfig& config) {
  require(model.spec.batchnorm_count() > 0, ErrorCode::kInvalidArgument,
          "test-time adaptation needs at least one batchnorm layer in the model");
  return Adapter(model, config);
}

Tensor<float> predict_bn(const Adapter& adapter, const Tensor<float>& images) {
  adapter.check_batch(images);
  return infer_probs(adapter.spec_, *adapter.snapshot_, images, StatMode::kTestBatch);
}

template <typename Real>
Objective<Real> tent_objective(const ModelSpec& spec, const ParamStore<Real>& params,
                               const Tensor<Real>& images) {
  const auto pass = network_forward(spec, params, images, StatMode::kTestBatch, true);
  const auto loss = entropy_with_logits(pass.logits);
  Objective<Real> out;
  out.loss = loss.loss;
  out.probs = softmax_forward(pass.logits);
  if (std::isfinite(loss.loss))
    out.grads = network_backward(spec, params, pass, loss.dlogits, RoleMask::bn_affine());
  return out;
}

template <typename Real>
Objective<Real> cotta_objective(const ModelSpec& spec, const ParamStore<Real>& student,
                                const Tensor<Real>& teacher_probs, const Tensor<Real>& images) {
  const auto pass = network_forward(spec, student, images, StatMode::kTestBatch, true);
  const auto loss = soft_cross_entropy_with_logits(teacher_probs, pass.logits);
  Objective<Real> out;
  out.loss = loss.loss;
  out.probs = softmax_forward(pass.logits);
  if (std::isfinite(loss.loss))
    out.grads = network_backward(spec, student, pass, loss.dlogits, RoleMask::trainable());
  return out;
}

StepOutcome step_tent(Adapter& adapter, const Tensor<float>& images) {
  adapter.check_batch(images);
  StepOutcome out;
  ++adapter.steps_;
  if (adapter.config_.learning_rate == 0.0) {
    out.probs = infer_probs(adapter.spec_, adapter.student_, images, StatMode::kTestBatch);
    out.loss = shannon_entropy(out.probs);
    return out;
  }
  auto objective = tent_objective(adapter.spec_, adapter.student_, images);
  out.probs = std::move(objective.probs);
  out.loss = objective.loss;
  if (!std::isfinite(objective.loss) || !all_finite(objective.grads)) {
    out.error = Error(ErrorCode::kNonFinite, "entropy loss is not finite; step skipped");
    return out;
  }
  ParamStore<float> candidate = adapter.student_;
  OptimizerState<float> opt = adapter.optimizer_;
  optimizer_step(candidate, objective.grads, opt, RoleMask::bn_affine());
  if (!all_finite(candidate)) {
    out.error = Error(ErrorCode::kNonFinite, "update produced non-finite parameters; step skipped");
    return out;
  }
  adapter.student_ = std::move(candidate);
  adapter.optimizer_ = std::move(opt);
  out.updated = true;
  return out;
}

StepOutcome step_cotta(Adapter& adapter, const Tensor<float>& images) {
  adapter.check_batch(images);
  StepOutcome out;
  ++adapter.steps_;
  const AdapterConfig& cfg = adapter.config_;
  out.probs = infer_probs(adapter.spec_, adapter.teacher_, images, StatMode::kTestBatch);

  if (cfg.learning_rate != 0.0) {
    auto objective = cotta_objective(adapter.spec_, adapter.student_, out.probs, images);
    out.loss = objective.loss;
    if (!std::isfinite(objective.loss) || !all_finite(objective.grads)) {
      out.error = Error(ErrorCode::kNonFinite, "consistency loss is not finite; step skipped");
      return out;
    }
    ParamStore<float> candidate = adapter.student_;
    OptimizerState<float> opt = adapter.optimizer_;
    optimizer_step(candidate, objective.grads, opt, RoleMask::trainable());
    if (!all_finite(candidate)) {
      out.error =
          Error(ErrorCode::kNonFinite, "update produced non-finite parameters; step skipped");
      return out;
    }
    adapter.student_ = std::move(candidate);
    adapter.optimizer_ = std::move(opt);
    out.updated = true;
  }

  // Statistics entries are identical in all three stores and stay that way.
  auto& teacher = adapter.teacher_.entries();
  const auto& student = adapter.student_.entries();
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    if (teacher[i].role == ParamRole::kBnStat) continue;
    ema_update_inplace(teacher[i].value, student[i].value, cfg.cotta_alpha);
  }

  if (cfg.restore_prob > 0.0) {
    const auto& source = adapter.snapshot_->entries();
    auto& live = adapter.student_.entries();
    for (std::size_t i = 0; i < live.size(); ++i) {
      float* p = live[i].value.raw();
      const float* s = source[i].value.raw();
      for (std::size_t j = 0; j < live[i].value.size(); ++j) {
        if (adapter.restore_rng_.bernoulli(cfg.restore_prob)) {
          p[j] = s[j];
          ++out.restored;
        }
      }
    }
  }
  return out;
}

template Objective<float> tent_objective(const ModelSpec&, const ParamStore<float>&,
                                         const Tensor<float>&);
template Objective<double> tent_objective(const ModelSpec&, const ParamStore<double>&,
                                          const Tensor<double>&);
template Objective<float> cotta_objective(const ModelSpec&, const ParamStore<float>&,
                                          const Tensor<float>&, const Tensor<float>&);
template Objective<double> cotta_objective(const ModelSpec&, const ParamStore<double>&,
                                           const Tensor<double>&, const Tensor<double>&);

}  // namespace cta
