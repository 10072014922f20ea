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
#include <span>
#include <string>
#include <vector>

#include "cta/tensor.hpp"

namespace cta {

// Labeled images of one domain. images: M x 3 x H x W in [0, 1].
struct Dataset {
  Tensor<float> images;
  std::vector<int> labels;
  int domain_id = 0;
  std::string name;
  std::size_t num_classes = 10;

  std::size_t size() const { return labels.size(); }
  std::size_t image_numel() const;

  // Copies the selected samples, in the given order.
  Dataset subset(const std::vector<std::size_t>& indices) const;

  bool operator==(const Dataset&) const = default;
};

// A slice of a stream. Labels travel with the batch for scoring only; adapters
// receive `images` alone.
struct Batch {
  Tensor<float> images;
  std::vector<int> labels;
  int domain_id = 0;
  std::size_t batch_index = 0;

  std::size_t size() const { return labels.size(); }
};

// Images of the selected samples stacked into one N x C x H x W tensor.
Tensor<float> gather_images(const Dataset& data, std::span<const std::size_t> indices);

}  // namespace cta
