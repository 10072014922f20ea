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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cta/dataset.hpp"

namespace cta {

inline constexpr std::size_t kImageSize = 32;
inline constexpr std::size_t kImageChannels = 3;
inline constexpr std::size_t kShapeClasses = 10;

enum class ShiftKind { kIdentity, kContextual, kSemantic };
// Rendering styles standing in for photo, sketch, clipart and painting.
enum class Style { kSolid, kOutline, kQuantized, kSmoothed };
enum class ShapeClass {
  kCircle, kSquare, kTriangle, kCross, kStar, kRing, kBar, kEll, kDiamond, kWave
};

std::string_view to_string(ShiftKind kind);
std::string_view to_string(Style style);
std::string_view to_string(ShapeClass shape);
ShiftKind shift_kind_from_string(std::string_view name);
Style style_from_string(std::string_view name);

struct ContextualParams {
  double background_level = 0.0;   // [0, 1]
  double texture_frequency = 0.0;  // cycles per image; 0 = flat background
  std::array<double, 3> gain{1.0, 1.0, 1.0};  // per-channel illumination gain
  std::array<double, 3> bias{0.0, 0.0, 0.0};  // per-channel illumination bias
  double noise_sigma = 0.0;
  double occluder_fraction = 0.0;  // [0, 0.4] of the image area

  bool operator==(const ContextualParams&) const = default;
};

struct DomainSpec {
  int id = 0;
  std::string name;
  ShiftKind kind = ShiftKind::kIdentity;
  ContextualParams contextual;
  Style style = Style::kSolid;
  // Sample geometry depends only on (seed, index); the shift's own
  // randomness additionally depends on the domain id.
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const DomainSpec&) const = default;
};

// Class-balanced dataset of 10 * per_class samples; label of sample k is k % 10.
Dataset generate_domain(const DomainSpec& spec, std::size_t per_class);

// Coverage mask (H x W, values in [0, 1]) of sample `index` before styling.
std::vector<float> render_shape_mask(std::uint64_t seed, std::size_t index);

// One sample as a 3 x 32 x 32 image; a pure function of (spec, index).
std::vector<float> render_sample(const DomainSpec& spec, std::size_t index);

// Default desk-scale benchmark: 11 contextual domains (id 0 is the clean
// identity domain) and 4 semantic styles (solid first).
std::vector<DomainSpec> default_contextual_domains(std::uint64_t seed = 1000);
std::vector<DomainSpec> default_semantic_domains(std::uint64_t seed = 2000);

inline constexpr std::size_t kDefaultPerClass = 60;

// Seeded class-stratified split; `fraction` of each class goes to train.
std::pair<Dataset, Dataset> split_train_val(const Dataset& data, double fraction,
                                            std::uint64_t seed);

struct Stream {
  std::vector<Batch> batches;
  std::size_t dropped_samples = 0;  // trailing single samples that were dropped
};

// Domains in the given order, each shuffled with a seed derived from
// (epoch_seed, domain position). Batches never straddle domains; a trailing
// batch of one sample is dropped.
Stream stream_batches(std::span<const Dataset> domains, std::size_t batch_size,
                      std::uint64_t epoch_seed);

// Reads root/<domain>/<class>/<image>.{pgm,ppm}. Domain and class indices
// follow sorted directory names; images are resized to 32 x 32.
std::vector<Dataset> ingest_folder(const std::filesystem::path& root);

// Writes each dataset as root/<name>/<class>/<index>.ppm.
void export_folder(std::span<const Dataset> domains, const std::filesystem::path& root);

}  // namespace cta
