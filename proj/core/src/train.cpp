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

#include "cta/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "cta/error.hpp"
#include "cta/layers.hpp"
#include "cta/rng.hpp"

namespace cta {

std::size_t Dataset::image_numel() const {
  return images.rank() == 4 ? images.dim(1) * images.dim(2) * images.dim(3) : 0;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.domain_id = domain_id;
  out.name = name;
  out.num_classes = num_classes;
  out.images = gather_images(*this, indices);
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels.at(i));
  return out;
}

Tensor<float> gather_images(const Dataset& data, std::span<const std::size_t> indices) {
  require(data.images.rank() == 4, ErrorCode::kShapeMismatch, "dataset images must be rank 4");
  const std::size_t per = data.image_numel();
  Tensor<float> out({indices.size(), data.images.dim(1), data.images.dim(2), data.images.dim(3)});
  for (std::size_t k = 0; k < indices.size(); ++k) {
    require(indices[k] < data.size(), ErrorCode::kOutOfRange,
            "sample " + std::to_string(indices[k]) + " of " + std::to_string(data.size()));
    std::memcpy(out.raw() + k * per, data.images.raw() + indices[k] * per, per * sizeof(float));
  }
  return out;
}

namespace {

template <typename Fn>
void for_each_batch(const Dataset& data, std::size_t batch_size, Fn&& fn) {
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    fn(idx);
  }
}

}  // namespace

double evaluate_accuracy(const Model<float>& model, const Dataset& data, StatMode mode,
                         std::size_t batch_size) {
  require(data.size() > 0, ErrorCode::kInvalidArgument, "accuracy of an empty dataset");
  std::size_t correct = 0;
  for_each_batch(data, batch_size, [&](const std::vector<std::size_t>& idx) {
    const auto eval = forward_eval(model, gather_images(data, idx), mode);
    for (std::size_t k = 0; k < idx.size(); ++k) correct += eval.predictions[k] == data.labels[idx[k]];
  });
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double evaluate_loss(const Model<float>& model, const Dataset& data, StatMode mode,
                     std::size_t batch_size) {
  require(data.size() > 0, ErrorCode::kInvalidArgument, "loss of an empty dataset");
  double total = 0.0;
  for_each_batch(data, batch_size, [&](const std::vector<std::size_t>& idx) {
    const auto pass = network_forward(model.spec, model.params, gather_images(data, idx), mode);
    std::vector<int> labels;
    for (auto i : idx) labels.push_back(data.labels[i]);
    total += cross_entropy_with_logits(pass.logits, labels).loss * static_cast<double>(idx.size());
  });
  return total / static_cast<double>(data.size());
}

TrainHistory train_source(Model<float>& model, const Dataset& train, const Dataset& val,
                          const TrainConfig& config) {
  require(train.size() > 0, ErrorCode::kInvalidArgument, "training set is empty");
  require(val.size() > 0, ErrorCode::kInvalidArgument, "validation set is empty");
  require(config.epochs >= 1, ErrorCode::kInvalidArgument, "epochs must be >= 1");
  require(config.batch_size >= 2, ErrorCode::kInvalidArgument, "training batch size must be >= 2");
  config.optimizer.validate();
  model.spec.layer_output_shapes();

  TrainHistory history;
  history.initial_loss = evaluate_loss(model, train, StatMode::kFrozenSource);
  OptimizerState<float> opt(config.optimizer);
  std::vector<std::size_t> order(train.size());
  std::vector<int> labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed({config.seed, epoch, 0x7EA1ULL}));
    rng.shuffle(order.begin(), order.end());

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      // Batch statistics of a single sample are degenerate.
      if (end - start < 2) break;
      std::span<const std::size_t> idx(order.data() + start, end - start);
      labels.clear();
      for (auto i : idx) labels.push_back(train.labels[i]);

      auto pass = network_forward(model.spec, model.params, gather_images(train, idx),
                                  StatMode::kTrainUpdate, true);
      const auto loss = cross_entropy_with_logits(pass.logits, labels);
      require(std::isfinite(loss.loss), ErrorCode::kNonFinite,
              "training loss diverged in epoch " + std::to_string(epoch + 1));
      const auto grads =
          network_backward(model.spec, model.params, pass, loss.dlogits, RoleMask::trainable());
      optimizer_step(model.params, grads, opt, RoleMask::trainable());
      apply_running_stats(model.spec, model.params, pass.batch_stats);
      loss_sum += loss.loss * static_cast<double>(idx.size());
      seen += idx.size();
    }
    history.epoch_train_loss.push_back(seen ? loss_sum / static_cast<double>(seen) : 0.0);
    if (config.eval_train_loss)
      history.epoch_eval_loss.push_back(evaluate_loss(model, train, StatMode::kFrozenSource));
    history.val_accuracy.push_back(evaluate_accuracy(model, val, StatMode::kFrozenSource));
  }
  history.final_val_accuracy = history.val_accuracy.back();
  return history;
}

}  // namespace cta
