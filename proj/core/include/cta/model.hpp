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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cta/batchnorm.hpp"
#include "cta/param_store.hpp"
#include "cta/tensor.hpp"

namespace cta {

enum class LayerKind { kConv2d, kDense, kBatchNorm, kRelu, kFlatten, kAvgPool };

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::size_t in = 0;      // conv2d / dense input channels or features
  std::size_t out = 0;     // conv2d / dense output channels or features
  std::size_t kernel = 3;  // conv2d
  std::size_t channels = 0;  // batchnorm
  std::size_t window = 2;    // avgpool
  bool bias = true;          // conv2d / dense

  static LayerSpec conv2d(std::size_t in, std::size_t out, std::size_t kernel = 3,
                          bool bias = true);
  static LayerSpec dense(std::size_t in, std::size_t out, bool bias = true);
  static LayerSpec batchnorm(std::size_t channels);
  static LayerSpec relu();
  static LayerSpec flatten();
  static LayerSpec avgpool(std::size_t window = 2);

  bool operator==(const LayerSpec&) const = default;
};

struct ModelSpec {
  std::array<std::size_t, 3> input_shape{3, 32, 32};  // C x H x W
  std::size_t num_classes = 10;
  std::vector<LayerSpec> layers;
  double bn_epsilon = kDefaultBnEpsilon;
  double bn_stat_momentum = kDefaultStatMomentum;

  bool operator==(const ModelSpec&) const = default;

  std::size_t batchnorm_count() const;

  // Output shape (without the batch axis) after every layer. Throws
  // ErrorCode::kComposition naming the first layer that does not fit.
  std::vector<Shape> layer_output_shapes() const;

  std::string to_json() const;
  static ModelSpec from_json(std::string_view text);
};

// conv16-BN-ReLU-pool, conv32-BN-ReLU-pool, flatten, dense. Convolutions
// feeding a batchnorm carry no bias (the normalization removes it).
ModelSpec default_model_spec(std::size_t num_classes = 10);

// Parameter names are "layerNN.<field>", zero padded so they sort by layer.
std::string param_name(std::size_t layer_index, std::string_view field);

template <typename Real>
struct Model {
  ModelSpec spec;
  ParamStore<Real> params;

  bool operator==(const Model&) const = default;
};

// He-normal weights from a seeded generator, zero biases, gamma 1, beta 0,
// running mean 0, running var 1.
template <typename Real>
Model<Real> build_model(const ModelSpec& spec, std::uint64_t seed);

template <typename Real>
struct LayerCache {
  Tensor<Real> input;
  BatchNormCache<Real> bn;
};

template <typename Real>
struct BatchStatistics {
  std::size_t layer = 0;
  std::vector<double> mean;
  std::vector<double> var;
};

template <typename Real>
struct ForwardPass {
  Tensor<Real> logits;
  std::vector<LayerCache<Real>> caches;  // empty unless keep_caches
  std::vector<BatchStatistics<Real>> batch_stats;
};

template <typename Real>
ForwardPass<Real> network_forward(const ModelSpec& spec, const ParamStore<Real>& params,
                                  const Tensor<Real>& images, StatMode mode,
                                  bool keep_caches = false);

// Gradients of a scalar loss w.r.t. every parameter whose role is in mask,
// given dL/dlogits and the caches of the matching forward pass.
template <typename Real>
ParamStore<Real> network_backward(const ModelSpec& spec, const ParamStore<Real>& params,
                                  const ForwardPass<Real>& pass, const Tensor<Real>& dlogits,
                                  RoleMask mask);

// Folds batch statistics into running statistics with the model's momentum.
template <typename Real>
void apply_running_stats(const ModelSpec& spec, ParamStore<Real>& params,
                         const std::vector<BatchStatistics<Real>>& stats);

template <typename Real>
struct Evaluation {
  Tensor<Real> probs;            // N x n
  std::vector<int> predictions;  // argmax, ties to the lowest class
};

// Inference only; mode must be kFrozenSource or kTestBatch.
template <typename Real>
Evaluation<Real> forward_eval(const Model<Real>& model, const Tensor<Real>& images,
                              StatMode mode);

template <typename Real>
void check_input_shape(const ModelSpec& spec, const Tensor<Real>& images);

}  // namespace cta
