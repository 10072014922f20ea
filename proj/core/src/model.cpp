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

#include "cta/model.hpp"

#include <cmath>

#include "cta/error.hpp"
#include "cta/rng.hpp"
#include "json.hpp"

namespace cta {

using nlohmann::json;

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kDense: return "dense";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kAvgPool: return "avgpool";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto k : {LayerKind::kConv2d, LayerKind::kDense, LayerKind::kBatchNorm, LayerKind::kRelu,
                 LayerKind::kFlatten, LayerKind::kAvgPool})
    if (to_string(k) == name) return k;
  fail(ErrorCode::kFormat, "unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::conv2d(std::size_t in, std::size_t out, std::size_t kernel, bool bias) {
  LayerSpec l;
  l.kind = LayerKind::kConv2d;
  l.in = in;
  l.out = out;
  l.kernel = kernel;
  l.bias = bias;
  return l;
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out, bool bias) {
  LayerSpec l;
  l.kind = LayerKind::kDense;
  l.in = in;
  l.out = out;
  l.bias = bias;
  return l;
}

LayerSpec LayerSpec::batchnorm(std::size_t channels) {
  LayerSpec l;
  l.kind = LayerKind::kBatchNorm;
  l.channels = channels;
  return l;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::flatten() {
  LayerSpec l;
  l.kind = LayerKind::kFlatten;
  return l;
}

LayerSpec LayerSpec::avgpool(std::size_t window) {
  LayerSpec l;
  l.kind = LayerKind::kAvgPool;
  l.window = window;
  return l;
}

std::size_t ModelSpec::batchnorm_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.kind == LayerKind::kBatchNorm;
  return n;
}

std::vector<Shape> ModelSpec::layer_output_shapes() const {
  auto bad = [](std::size_t i, const LayerSpec& l, const std::string& why) {
    fail(ErrorCode::kComposition,
         "layer " + std::to_string(i) + " (" + std::string(to_string(l.kind)) + "): " + why);
  };
  for (auto d : input_shape)
    require(d > 0, ErrorCode::kComposition, "input shape has a zero dimension");
  require(num_classes >= 2, ErrorCode::kComposition, "need at least two classes");
  require(!layers.empty(), ErrorCode::kComposition, "model has no layers");

  std::vector<Shape> shapes;
  Shape cur{input_shape[0], input_shape[1], input_shape[2]};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.kind) {
      case LayerKind::kConv2d:
        if (cur.size() != 3) bad(i, l, "needs a C x H x W input, got " + shape_string(cur));
        if (l.kernel == 0 || l.kernel % 2 == 0) bad(i, l, "kernel must be odd");
        if (l.out == 0) bad(i, l, "zero output channels");
        if (l.in != cur[0])
          bad(i, l, "expects " + std::to_string(l.in) + " input channels, previous layer produces " +
                        std::to_string(cur[0]));
        cur = {l.out, cur[1], cur[2]};
        break;
      case LayerKind::kDense:
        if (cur.size() != 1) bad(i, l, "needs a flat input, got " + shape_string(cur));
        if (l.out == 0) bad(i, l, "zero outputs");
        if (l.in != cur[0])
          bad(i, l, "expects " + std::to_string(l.in) + " inputs, previous layer produces " +
                        std::to_string(cur[0]));
        cur = {l.out};
        break;
      case LayerKind::kBatchNorm:
        if (l.channels != cur[0])
          bad(i, l, "has " + std::to_string(l.channels) + " channels, input has " +
                        std::to_string(cur[0]));
        break;
      case LayerKind::kRelu:
        break;
      case LayerKind::kFlatten:
        cur = {shape_numel(cur)};
        break;
      case LayerKind::kAvgPool:
        if (cur.size() != 3) bad(i, l, "needs a C x H x W input, got " + shape_string(cur));
        if (l.window == 0 || cur[1] % l.window != 0 || cur[2] % l.window != 0)
          bad(i, l, "window " + std::to_string(l.window) + " does not tile " + shape_string(cur));
        cur = {cur[0], cur[1] / l.window, cur[2] / l.window};
        break;
    }
    shapes.push_back(cur);
  }
  if (cur.size() != 1 || cur[0] != num_classes)
    bad(layers.size() - 1, layers.back(),
        "final output " + shape_string(cur) + " is not " + std::to_string(num_classes) + " logits");
  return shapes;
}

std::string ModelSpec::to_json() const {
  json layer_list = json::array();
  for (const auto& l : layers) {
    json j{{"kind", to_string(l.kind)}};
    switch (l.kind) {
      case LayerKind::kConv2d:
        j["in"] = l.in;
        j["out"] = l.out;
        j["kernel"] = l.kernel;
        j["bias"] = l.bias;
        break;
      case LayerKind::kDense:
        j["in"] = l.in;
        j["out"] = l.out;
        j["bias"] = l.bias;
        break;
      case LayerKind::kBatchNorm: j["channels"] = l.channels; break;
      case LayerKind::kAvgPool: j["window"] = l.window; break;
      default: break;
    }
    layer_list.push_back(std::move(j));
  }
  json doc{{"input_shape", input_shape},
           {"num_classes", num_classes},
           {"bn_epsilon", bn_epsilon},
           {"bn_stat_momentum", bn_stat_momentum},
           {"layers", std::move(layer_list)}};
  return doc.dump();
}

ModelSpec ModelSpec::from_json(std::string_view text) {
  ModelSpec spec;
  try {
    const json doc = json::parse(text);
    spec.input_shape = doc.at("input_shape").get<std::array<std::size_t, 3>>();
    spec.num_classes = doc.at("num_classes").get<std::size_t>();
    spec.bn_epsilon = doc.value("bn_epsilon", kDefaultBnEpsilon);
    spec.bn_stat_momentum = doc.value("bn_stat_momentum", kDefaultStatMomentum);
    for (const auto& j : doc.at("layers")) {
      LayerSpec l;
      l.kind = layer_kind_from_string(j.at("kind").get<std::string>());
      l.in = j.value("in", std::size_t{0});
      l.out = j.value("out", std::size_t{0});
      l.kernel = j.value("kernel", std::size_t{3});
      l.channels = j.value("channels", std::size_t{0});
      l.window = j.value("window", std::size_t{2});
      l.bias = j.value("bias", true);
      spec.layers.push_back(l);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("model spec: ") + e.what());
  }
  return spec;
}

ModelSpec default_model_spec(std::size_t num_classes) {
  ModelSpec spec;
  spec.input_shape = {3, 32, 32};
  spec.num_classes = num_classes;
  spec.layers = {
      LayerSpec::conv2d(3, 16, 3, false), LayerSpec::batchnorm(16), LayerSpec::relu(),
      LayerSpec::avgpool(2),
      LayerSpec::conv2d(16, 32, 3, false), LayerSpec::batchnorm(32), LayerSpec::relu(),
      LayerSpec::avgpool(2),
      LayerSpec::flatten(),
      LayerSpec::dense(32 * 8 * 8, num_classes),
  };
  return spec;
}

std::string param_name(std::size_t layer_index, std::string_view field) {
  std::string idx = std::to_string(layer_index);
  if (idx.size() < 2) idx.insert(idx.begin(), 2 - idx.size(), '0');
  return "layer" + idx + "." + std::string(field);
}

template <typename Real>
Model<Real> build_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.layer_output_shapes();
  Model<Real> model{spec, {}};
  Rng rng(derive_seed({seed, 0x1A7E5ULL}));
  auto he = [&rng](Shape shape, std::size_t fan_in) {
    Tensor<Real> t(std::move(shape));
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<Real>(rng.normal() * std_dev);
    return t;
  };
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    auto& p = model.params;
    switch (l.kind) {
      case LayerKind::kConv2d:
        p.add(param_name(i, "weight"), ParamRole::kWeight,
              he({l.out, l.in, l.kernel, l.kernel}, l.in * l.kernel * l.kernel));
        if (l.bias) p.add(param_name(i, "bias"), ParamRole::kBias, Tensor<Real>({l.out}));
        break;
      case LayerKind::kDense:
        p.add(param_name(i, "weight"), ParamRole::kWeight, he({l.out, l.in}, l.in));
        if (l.bias) p.add(param_name(i, "bias"), ParamRole::kBias, Tensor<Real>({l.out}));
        break;
      case LayerKind::kBatchNorm:
        p.add(param_name(i, "gamma"), ParamRole::kBnAffine, Tensor<Real>({l.channels}, Real{1}));
        p.add(param_name(i, "beta"), ParamRole::kBnAffine, Tensor<Real>({l.channels}, Real{0}));
        p.add(param_name(i, "running_mean"), ParamRole::kBnStat,
              Tensor<Real>({l.channels}, Real{0}));
        p.add(param_name(i, "running_var"), ParamRole::kBnStat,
              Tensor<Real>({l.channels}, Real{1}));
        break;
      default:
        break;
    }
  }
  return model;
}

template Model<float> build_model(const ModelSpec&, std::uint64_t);
template Model<double> build_model(const ModelSpec&, std::uint64_t);

}  // namespace cta
