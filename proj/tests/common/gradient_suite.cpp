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

#include "gradient_suite.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "cta/adapt.hpp"
#include "cta/batchnorm.hpp"
#include "cta/layers.hpp"
#include "cta/model.hpp"
#include "cta/rng.hpp"

namespace cta::testing {
namespace {

using T = Tensor<double>;
using Store = ParamStore<double>;

T random_tensor(Rng& rng, Shape shape, double scale = 1.0) {
  T t(std::move(shape));
  for (auto& v : t.values()) v = scale * rng.normal();
  return t;
}

// Values at least `margin` away from zero, for the ReLU primitive.
T away_from_zero(Rng& rng, Shape shape, double margin) {
  T t(std::move(shape));
  for (auto& v : t.values()) {
    const double mag = margin + std::abs(rng.normal());
    v = rng.bernoulli(0.5) ? mag : -mag;
  }
  return t;
}

double dot(const T& a, const T& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

T random_probs(Rng& rng, std::size_t rows, std::size_t cols) {
  return softmax_forward(random_tensor(rng, {rows, cols}));
}

struct Problem {
  LossFunction fn;
  Store params;
};

Problem dense_problem(Rng& rng) {
  const std::size_t n = 1 + rng.below(4), in = 1 + rng.below(6), out = 1 + rng.below(5);
  Store p;
  p.add("x", ParamRole::kWeight, random_tensor(rng, {n, in}));
  p.add("w", ParamRole::kWeight, random_tensor(rng, {out, in}));
  p.add("b", ParamRole::kBias, random_tensor(rng, {out}));
  const T r = random_tensor(rng, {n, out});
  return {[r](const Store& s) {
            LossAndGrad lg;
            lg.loss = dot(r, dense_forward(s.at("x"), s.at("w"), s.at("b")));
            auto g = dense_backward(s.at("x"), s.at("w"), r);
            lg.grads.add("x", ParamRole::kWeight, g.dx);
            lg.grads.add("w", ParamRole::kWeight, g.dw);
            lg.grads.add("b", ParamRole::kBias, g.db);
            return lg;
          },
          p};
}

Problem conv_problem(Rng& rng) {
  const std::size_t n = 1 + rng.below(2), c = 1 + rng.below(3), oc = 1 + rng.below(3);
  const std::size_t k = 1 + 2 * rng.below(3), h = 3 + rng.below(4), w = 3 + rng.below(4);
  Store p;
  p.add("x", ParamRole::kWeight, random_tensor(rng, {n, c, h, w}));
  p.add("w", ParamRole::kWeight, random_tensor(rng, {oc, c, k, k}, 0.5));
  p.add("b", ParamRole::kBias, random_tensor(rng, {oc}));
  const T r = random_tensor(rng, {n, oc, h, w});
  return {[r](const Store& s) {
            LossAndGrad lg;
            lg.loss = dot(r, conv2d_forward(s.at("x"), s.at("w"), s.at("b")));
            auto g = conv2d_backward(s.at("x"), s.at("w"), r);
            lg.grads.add("x", ParamRole::kWeight, g.dx);
            lg.grads.add("w", ParamRole::kWeight, g.dw);
            lg.grads.add("b", ParamRole::kBias, g.db);
            return lg;
          },
          p};
}

Problem relu_problem(Rng& rng) {
  const Shape shape{1 + rng.below(3), 1 + rng.below(8)};
  Store p;
  p.add("x", ParamRole::kWeight, away_from_zero(rng, shape, 1e-2));
  const T r = random_tensor(rng, shape);
  return {[r](const Store& s) {
            LossAndGrad lg;
            lg.loss = dot(r, relu_forward(s.at("x")));
            lg.grads.add("x", ParamRole::kWeight, relu_backward(s.at("x"), r));
            return lg;
          },
          p};
}

Problem avgpool_problem(Rng& rng) {
  const std::size_t window = 1 + rng.below(3);
  const Shape shape{1 + rng.below(2), 1 + rng.below(3), window * (1 + rng.below(3)),
                    window * (1 + rng.below(3))};
  Store p;
  p.add("x", ParamRole::kWeight, random_tensor(rng, shape));
  const T r = random_tensor(rng, {shape[0], shape[1], shape[2] / window, shape[3] / window});
  return {[r, shape, window](const Store& s) {
            LossAndGrad lg;
            lg.loss = dot(r, avgpool_forward(s.at("x"), window));
            lg.grads.add("x", ParamRole::kWeight, avgpool_backward(shape, r, window));
            return lg;
          },
          p};
}

Problem softmax_problem(Rng& rng) {
  const Shape shape{1 + rng.below(4), 2 + rng.below(6)};
  Store p;
  p.add("z", ParamRole::kWeight, random_tensor(rng, shape, 2.0));
  const T r = random_tensor(rng, shape);
  return {[r](const Store& s) {
            LossAndGrad lg;
            const T probs = softmax_forward(s.at("z"));
            lg.loss = dot(r, probs);
            lg.grads.add("z", ParamRole::kWeight, softmax_backward(probs, r));
            return lg;
          },
          p};
}

Problem soft_ce_problem(Rng& rng) {
  const std::size_t rows = 1 + rng.below(4), cols = 2 + rng.below(6);
  Store p;
  p.add("t", ParamRole::kWeight, random_probs(rng, rows, cols));
  // Keep predictions well inside (0, 1) so the logarithm stays smooth.
  T pred = random_probs(rng, rows, cols);
  for (auto& v : pred.values()) v = 0.05 + 0.9 * v;
  p.add("p", ParamRole::kWeight, pred);
  return {[](const Store& s) {
            LossAndGrad lg;
            lg.loss = soft_cross_entropy(s.at("t"), s.at("p"));
            auto g = soft_cross_entropy_backward(s.at("t"), s.at("p"));
            lg.grads.add("t", ParamRole::kWeight, g.dtarget);
            lg.grads.add("p", ParamRole::kWeight, g.dpred);
            return lg;
          },
          p};
}

Problem batchnorm_problem(Rng& rng, StatMode mode) {
  const std::size_t n = 2 + rng.below(4), c = 1 + rng.below(3);
  const Shape shape = rng.bernoulli(0.5) ? Shape{n, c} : Shape{n, c, 1 + rng.below(3), 1 + rng.below(3)};
  Store p;
  p.add("x", ParamRole::kWeight, random_tensor(rng, shape));
  T gamma({c}), beta({c}), mean({c}), var({c});
  for (std::size_t i = 0; i < c; ++i) {
    gamma[i] = rng.uniform(0.5, 1.5);
    beta[i] = rng.normal();
    mean[i] = 0.5 * rng.normal();
    var[i] = rng.uniform(0.5, 2.0);
  }
  p.add("gamma", ParamRole::kBnAffine, gamma);
  p.add("beta", ParamRole::kBnAffine, beta);
  const double eps = rng.bernoulli(0.5) ? 1e-5 : 1e-3;
  const T r = random_tensor(rng, shape);
  return {[=](const Store& s) {
            LossAndGrad lg;
            auto fwd = batchnorm_forward(s.at("x"), s.at("gamma"), s.at("beta"), mean, var, eps, mode);
            lg.loss = dot(r, fwd.y);
            auto g = batchnorm_backward(r, s.at("gamma"), fwd.cache);
            lg.grads.add("x", ParamRole::kWeight, g.dx);
            lg.grads.add("gamma", ParamRole::kBnAffine, g.dgamma);
            lg.grads.add("beta", ParamRole::kBnAffine, g.dbeta);
            return lg;
          },
          p};
}

Problem logit_loss_problem(Rng& rng, int which) {
  const std::size_t rows = 1 + rng.below(4), cols = 2 + rng.below(6);
  Store p;
  p.add("z", ParamRole::kWeight, random_tensor(rng, {rows, cols}, 2.0));
  std::vector<int> labels(rows);
  for (auto& l : labels) l = static_cast<int>(rng.below(cols));
  const T target = random_probs(rng, rows, cols);
  return {[=](const Store& s) {
            LogitLoss<double> out;
            if (which == 0) out = cross_entropy_with_logits(s.at("z"), std::span<const int>(labels));
            else if (which == 1) out = entropy_with_logits(s.at("z"));
            else out = soft_cross_entropy_with_logits(target, s.at("z"));
            LossAndGrad lg;
            lg.loss = out.loss;
            lg.grads.add("z", ParamRole::kWeight, out.dlogits);
            return lg;
          },
          p};
}

ModelSpec small_spec(Rng& rng) {
  ModelSpec spec;
  const std::size_t c = 1 + rng.below(2), hidden = 2 + rng.below(2), size = 4;
  const std::size_t classes = 3 + rng.below(3);
  spec.input_shape = {c, size, size};
  spec.num_classes = classes;
  spec.layers = {LayerSpec::conv2d(c, hidden, 3, rng.bernoulli(0.5)), LayerSpec::batchnorm(hidden),
                 LayerSpec::relu(), LayerSpec::avgpool(2), LayerSpec::flatten(),
                 LayerSpec::dense(hidden * 4, classes)};
  return spec;
}

Store randomized_params(const ModelSpec& spec, Rng& rng) {
  Store params = build_model<double>(spec, rng.next_u64()).params;
  for (auto& e : params.entries()) {
    if (e.role != ParamRole::kBnAffine) continue;
    const bool is_gamma = e.name.ends_with("gamma");
    for (auto& v : e.value.values()) v = is_gamma ? rng.uniform(0.5, 1.5) : 0.3 * rng.normal();
  }
  return params;
}

// Smallest |input| over every ReLU in the network; perturbing one parameter
// by the finite-difference step must not cross the kink.
double relu_margin(const ModelSpec& spec, const Store& params, const T& images) {
  const auto pass = network_forward(spec, params, images, StatMode::kTestBatch, true);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind != LayerKind::kRelu) continue;
    for (double v : pass.caches[i].input.values()) margin = std::min(margin, std::abs(v));
  }
  return margin;
}

constexpr double kKinkMargin = 1e-3;

Problem network_problem(Rng& rng, bool cotta) {
  for (;;) {
    const ModelSpec spec = small_spec(rng);
    const Store params = randomized_params(spec, rng);
    const std::size_t n = 2 + rng.below(3);
    const T images = random_tensor(rng, {n, spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]});
    if (relu_margin(spec, params, images) < kKinkMargin) continue;
    if (!cotta) {
      return {[=](const Store& s) {
                auto obj = tent_objective(spec, s, images);
                return LossAndGrad{obj.loss, std::move(obj.grads)};
              },
              params};
    }
    const T teacher = random_probs(rng, n, spec.num_classes);
    return {[=](const Store& s) {
              auto obj = cotta_objective(spec, s, teacher, images);
              return LossAndGrad{obj.loss, std::move(obj.grads)};
            },
            params};
  }
}

Problem make_problem(const std::string& kind, Rng& rng) {
  if (kind == "dense") return dense_problem(rng);
  if (kind == "conv2d") return conv_problem(rng);
  if (kind == "relu") return relu_problem(rng);
  if (kind == "avgpool") return avgpool_problem(rng);
  if (kind == "softmax") return softmax_problem(rng);
  if (kind == "soft_cross_entropy") return soft_ce_problem(rng);
  if (kind == "batchnorm_batch_stats") return batchnorm_problem(rng, StatMode::kTestBatch);
  if (kind == "batchnorm_frozen_stats") return batchnorm_problem(rng, StatMode::kFrozenSource);
  if (kind == "cross_entropy_logits") return logit_loss_problem(rng, 0);
  if (kind == "entropy_logits") return logit_loss_problem(rng, 1);
  if (kind == "soft_cross_entropy_logits") return logit_loss_problem(rng, 2);
  if (kind == "tent_objective") return network_problem(rng, false);
  return network_problem(rng, true);
}

}  // namespace

std::vector<std::string> gradient_case_kinds() {
  return {"dense",          "conv2d",
          "relu",           "avgpool",
          "softmax",        "soft_cross_entropy",
          "batchnorm_batch_stats", "batchnorm_frozen_stats",
          "cross_entropy_logits",  "entropy_logits",
          "soft_cross_entropy_logits", "tent_objective",
          "cotta_objective"};
}

std::vector<GradientCase> run_gradient_suite(std::size_t instances, std::uint64_t seed) {
  const auto kinds = gradient_case_kinds();
  std::vector<GradientCase> out;
  for (std::size_t i = 0; i < instances; ++i) {
    Rng rng(derive_seed({seed, i, 0x96AD}));
    const std::string& kind = kinds[i % kinds.size()];
    Problem problem = make_problem(kind, rng);
    GradCheckOptions options;
    options.seed = derive_seed({seed, i});
    out.push_back({kind, i, gradient_check(problem.fn, problem.params, options)});
  }
  return out;
}

}  // namespace cta::testing
