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

#include "cta/error.hpp"
#include "cta/layers.hpp"
#include "cta/model.hpp"
#include "cta/numerics.hpp"

namespace cta {

template <typename Real>
void check_input_shape(const ModelSpec& spec, const Tensor<Real>& images) {
  const Shape expected{spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]};
  require(images.rank() == 4 && Shape(images.shape().begin() + 1, images.shape().end()) == expected,
          ErrorCode::kShapeMismatch,
          "images " + shape_string(images.shape()) + " do not match model input N x " +
              shape_string(expected));
  require(images.dim(0) >= 1, ErrorCode::kInvalidArgument, "empty batch");
}

template <typename Real>
ForwardPass<Real> network_forward(const ModelSpec& spec, const ParamStore<Real>& params,
                                  const Tensor<Real>& images, StatMode mode, bool keep_caches) {
  check_input_shape(spec, images);
  ForwardPass<Real> pass;
  if (keep_caches) pass.caches.resize(spec.layers.size());
  Tensor<Real> x = images;
  const std::size_t n = images.dim(0);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    Tensor<Real> y;
    switch (l.kind) {
      case LayerKind::kConv2d: {
        const Tensor<Real> zero_bias({l.out});
        y = conv2d_forward(x, params.at(param_name(i, "weight")),
                           l.bias ? params.at(param_name(i, "bias")) : zero_bias);
        break;
      }
      case LayerKind::kDense: {
        const Tensor<Real> zero_bias({l.out});
        y = dense_forward(x, params.at(param_name(i, "weight")),
                          l.bias ? params.at(param_name(i, "bias")) : zero_bias);
        break;
      }
      case LayerKind::kBatchNorm: {
        auto bn = batchnorm_forward(x, params.at(param_name(i, "gamma")),
                                    params.at(param_name(i, "beta")),
                                    params.at(param_name(i, "running_mean")),
                                    params.at(param_name(i, "running_var")), spec.bn_epsilon, mode);
        if (mode == StatMode::kTrainUpdate)
          pass.batch_stats.push_back({i, bn.cache.mean, bn.cache.var});
        y = std::move(bn.y);
        if (keep_caches) pass.caches[i].bn = std::move(bn.cache);
        break;
      }
      case LayerKind::kRelu:
        y = relu_forward(x);
        break;
      case LayerKind::kFlatten:
        y = x.reshaped({n, x.size() / n});
        break;
      case LayerKind::kAvgPool:
        y = avgpool_forward(x, l.window);
        break;
    }
    if (keep_caches) pass.caches[i].input = std::move(x);
    x = std::move(y);
  }
  pass.logits = std::move(x);
  return pass;
}

template <typename Real>
ParamStore<Real> network_backward(const ModelSpec& spec, const ParamStore<Real>& params,
                                  const ForwardPass<Real>& pass, const Tensor<Real>& dlogits,
                                  RoleMask mask) {
  require(pass.caches.size() == spec.layers.size(), ErrorCode::kInvalidArgument,
          "backward needs a forward pass run with keep_caches");
  require(dlogits.shape() == pass.logits.shape(), ErrorCode::kShapeMismatch,
          "logit gradient " + shape_string(dlogits.shape()) + " vs logits " +
              shape_string(pass.logits.shape()));
  ParamStore<Real> grads = params.zeros_like(mask);
  // bn-stat entries are never differentiated; they stay zero if requested.

  // Earliest layer that owns a requested parameter; nothing below it needs dx.
  std::size_t first = spec.layers.size();
  for (std::size_t i = 0; i < spec.layers.size() && first == spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if ((l.kind == LayerKind::kConv2d || l.kind == LayerKind::kDense) &&
        (mask.contains(ParamRole::kWeight) || (l.bias && mask.contains(ParamRole::kBias))))
      first = i;
    if (l.kind == LayerKind::kBatchNorm && mask.contains(ParamRole::kBnAffine)) first = i;
  }
  Tensor<Real> dy = dlogits;
  for (std::size_t i = spec.layers.size(); i-- > first;) {
    const LayerSpec& l = spec.layers[i];
    const auto& cache = pass.caches[i];
    const bool need_dx = i > first;
    Tensor<Real> dx;
    switch (l.kind) {
      case LayerKind::kConv2d:
      case LayerKind::kDense: {
        const bool want_w = mask.contains(ParamRole::kWeight);
        const bool want_b = l.bias && mask.contains(ParamRole::kBias);
        const auto& w = params.at(param_name(i, "weight"));
        Tensor<Real> dw, db;
        if (l.kind == LayerKind::kConv2d) {
          auto g = conv2d_backward(cache.input, w, dy, need_dx, want_w || want_b);
          dx = std::move(g.dx);
          dw = std::move(g.dw);
          db = std::move(g.db);
        } else {
          auto g = dense_backward(cache.input, w, dy, need_dx, want_w || want_b);
          dx = std::move(g.dx);
          dw = std::move(g.dw);
          db = std::move(g.db);
        }
        if (want_w) grads.at(param_name(i, "weight")) = std::move(dw);
        if (want_b) grads.at(param_name(i, "bias")) = std::move(db);
        break;
      }
      case LayerKind::kBatchNorm: {
        auto g = batchnorm_backward(dy, params.at(param_name(i, "gamma")), cache.bn, need_dx);
        if (mask.contains(ParamRole::kBnAffine)) {
          grads.at(param_name(i, "gamma")) = std::move(g.dgamma);
          grads.at(param_name(i, "beta")) = std::move(g.dbeta);
        }
        dx = std::move(g.dx);
        break;
      }
      case LayerKind::kRelu:
        if (need_dx) dx = relu_backward(cache.input, dy);
        break;
      case LayerKind::kFlatten:
        if (need_dx) dx = dy.reshaped(cache.input.shape());
        break;
      case LayerKind::kAvgPool:
        if (need_dx) dx = avgpool_backward(cache.input.shape(), dy, l.window);
        break;
    }
    dy = std::move(dx);
  }
  return grads;
}

template <typename Real>
void apply_running_stats(const ModelSpec& spec, ParamStore<Real>& params,
                         const std::vector<BatchStatistics<Real>>& stats) {
  for (const auto& s : stats) {
    const std::size_t c = s.mean.size();
    Tensor<Real> mean({c}), var({c});
    for (std::size_t i = 0; i < c; ++i) {
      mean[i] = static_cast<Real>(s.mean[i]);
      var[i] = static_cast<Real>(s.var[i]);
    }
    ema_update_inplace(params.at(param_name(s.layer, "running_mean")), mean, spec.bn_stat_momentum);
    ema_update_inplace(params.at(param_name(s.layer, "running_var")), var, spec.bn_stat_momentum);
  }
}

template <typename Real>
Evaluation<Real> forward_eval(const Model<Real>& model, const Tensor<Real>& images, StatMode mode) {
  require(mode != StatMode::kTrainUpdate, ErrorCode::kInvalidArgument,
          "forward_eval is inference only; use train_source for train-update mode");
  auto pass = network_forward(model.spec, model.params, images, mode, false);
  Evaluation<Real> out;
  out.probs = softmax_forward(pass.logits);
  out.predictions = argmax_rows(out.probs);
  return out;
}

#define CTA_INSTANTIATE(Real)                                                                 \
  template void check_input_shape(const ModelSpec&, const Tensor<Real>&);                     \
  template ForwardPass<Real> network_forward(const ModelSpec&, const ParamStore<Real>&,       \
                                             const Tensor<Real>&, StatMode, bool);            \
  template ParamStore<Real> network_backward(const ModelSpec&, const ParamStore<Real>&,       \
                                             const ForwardPass<Real>&, const Tensor<Real>&,   \
                                             RoleMask);                                       \
  template void apply_running_stats(const ModelSpec&, ParamStore<Real>&,                      \
                                    const std::vector<BatchStatistics<Real>>&);               \
  template Evaluation<Real> forward_eval(const Model<Real>&, const Tensor<Real>&, StatMode);

CTA_INSTANTIATE(float)
CTA_INSTANTIATE(double)
#undef CTA_INSTANTIATE

}  // namespace cta
