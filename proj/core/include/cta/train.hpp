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
#include <span>
#include <vector>

#include "cta/dataset.hpp"
#include "cta/model.hpp"
#include "cta/optim.hpp"

namespace cta {

struct TrainConfig {
  std::size_t epochs = 12;
  std::size_t batch_size = 64;
  OptimizerConfig optimizer{OptimizerKind::kAdam, 2e-3};
  std::uint64_t seed = 0;
  // Also score the whole train set with frozen statistics after every epoch.
  bool eval_train_loss = false;
};

struct TrainHistory {
  double initial_loss = 0.0;             // frozen-stat loss on the train set
  std::vector<double> epoch_train_loss;  // mean minibatch loss
  std::vector<double> epoch_eval_loss;   // frozen-stat loss on the train set, if enabled
  std::vector<double> val_accuracy;      // fraction in [0, 1]
  double final_val_accuracy = 0.0;
};

// Minibatch training with softmax cross-entropy; batchnorm runs in
// kTrainUpdate mode. Validation uses the frozen running statistics.
TrainHistory train_source(Model<float>& model, const Dataset& train, const Dataset& val,
                          const TrainConfig& config);

// Accuracy over a dataset in sequential batches, in [0, 1].
double evaluate_accuracy(const Model<float>& model, const Dataset& data, StatMode mode,
                         std::size_t batch_size = 256);

double evaluate_loss(const Model<float>& model, const Dataset& data, StatMode mode,
                     std::size_t batch_size = 256);

}  // namespace cta
