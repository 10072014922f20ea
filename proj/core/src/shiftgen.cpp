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

#include "cta/shiftgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "cta/error.hpp"
#include "cta/rng.hpp"

namespace cta {

std::string_view to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::kIdentity: return "identity";
    case ShiftKind::kContextual: return "contextual";
    case ShiftKind::kSemantic: return "semantic";
  }
  return "unknown";
}

std::string_view to_string(Style style) {
  switch (style) {
    case Style::kSolid: return "solid";
    case Style::kOutline: return "outline";
    case Style::kQuantized: return "quantized";
    case Style::kSmoothed: return "smoothed";
  }
  return "unknown";
}

std::string_view to_string(ShapeClass shape) {
  static constexpr std::string_view kNames[] = {"circle", "square", "triangle", "cross", "star",
                                                "ring",   "bar",    "ell",      "diamond", "wave"};
  return kNames[static_cast<std::size_t>(shape)];
}

ShiftKind shift_kind_from_string(std::string_view name) {
  for (auto k : {ShiftKind::kIdentity, ShiftKind::kContextual, ShiftKind::kSemantic})
    if (to_string(k) == name) return k;
  fail(ErrorCode::kInvalidArgument, "unknown shift kind '" + std::string(name) + "'");
}

Style style_from_string(std::string_view name) {
  for (auto s : {Style::kSolid, Style::kOutline, Style::kQuantized, Style::kSmoothed})
    if (to_string(s) == name) return s;
  fail(ErrorCode::kInvalidArgument,
       "unknown style '" + std::string(name) + "' (solid, outline, quantized, smoothed)");
}

namespace {

void check_range(double v, double lo, double hi, const std::string& what) {
  require(std::isfinite(v) && v >= lo && v <= hi, ErrorCode::kOutOfRange,
          what + " = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
              std::to_string(hi) + "]");
}

}  // namespace

void DomainSpec::validate() const {
  const std::string where = "domain " + std::to_string(id) + ": ";
  require(id >= 0, ErrorCode::kOutOfRange, where + "id must be non-negative");
  const auto style_index = static_cast<int>(style);
  require(style_index >= 0 && style_index <= static_cast<int>(Style::kSmoothed),
          ErrorCode::kInvalidArgument, where + "unknown style");
  const auto& p = contextual;
  check_range(p.background_level, 0.0, 1.0, where + "background_level");
  check_range(p.texture_frequency, 0.0, 16.0, where + "texture_frequency");
  for (std::size_t c = 0; c < 3; ++c) {
    check_range(p.gain[c], 0.0, 4.0, where + "gain[" + std::to_string(c) + "]");
    check_range(p.bias[c], -1.0, 1.0, where + "bias[" + std::to_string(c) + "]");
  }
  check_range(p.noise_sigma, 0.0, 1.0, where + "noise_sigma");
  check_range(p.occluder_fraction, 0.0, 0.4, where + "occluder_fraction");
}

Dataset generate_domain(const DomainSpec& spec, std::size_t per_class) {
  spec.validate();
  require(per_class >= 1, ErrorCode::kInvalidArgument, "per_class must be at least 1");
  const std::size_t m = per_class * kShapeClasses;
  const std::size_t per = kImageChannels * kImageSize * kImageSize;
  Dataset out;
  out.domain_id = spec.id;
  out.name = spec.name.empty() ? "domain" + std::to_string(spec.id) : spec.name;
  out.num_classes = kShapeClasses;
  out.images = Tensor<float>({m, kImageChannels, kImageSize, kImageSize});
  out.labels.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto pixels = render_sample(spec, k);
    std::memcpy(out.images.raw() + k * per, pixels.data(), per * sizeof(float));
    out.labels[k] = static_cast<int>(k % kShapeClasses);
  }
  return out;
}

std::vector<DomainSpec> default_contextual_domains(std::uint64_t seed) {
  struct Row {
    const char* name;
    double background, texture;
    std::array<double, 3> gain, bias;
    double noise, occluder;
  };
  // Illumination, background clutter, sensor noise and occlusion; the shape
  // rendering itself is untouched.
  static constexpr Row kRows[] = {
      {"clean", 0.0, 0.0, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, 0.0, 0.0},
      {"dim", 0.0, 0.0, {0.3, 0.3, 0.3}, {0.02, 0.02, 0.02}, 0.0, 0.0},
      {"gray-wall", 0.3, 0.0, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, 0.05, 0.0},
      {"striped", 0.3, 4.0, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, 0.0, 0.0},
      {"warm-light", 0.1, 0.0, {1.3, 0.8, 0.5}, {0.15, 0.0, 0.0}, 0.0, 0.0},
      {"grainy", 0.0, 0.0, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, 0.12, 0.0},
      {"hand", 0.15, 0.0, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, 0.0, 0.15},
      {"haze", 0.0, 0.0, {0.5, 0.5, 0.5}, {0.3, 0.3, 0.3}, 0.0, 0.0},
      {"shelf", 0.25, 6.0, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, 0.06, 0.0},
      {"cool-light", 0.0, 0.0, {0.5, 0.8, 1.4}, {0.0, 0.05, 0.1}, 0.0, 0.1},
      {"bright-room", 0.35, 0.0, {0.8, 0.8, 0.8}, {0.0, 0.0, 0.0}, 0.08, 0.0},
  };
  std::vector<DomainSpec> out;
  for (std::size_t i = 0; i < std::size(kRows); ++i) {
    const Row& r = kRows[i];
    DomainSpec d;
    d.id = static_cast<int>(i);
    d.name = r.name;
    d.kind = i == 0 ? ShiftKind::kIdentity : ShiftKind::kContextual;
    d.contextual = {r.background, r.texture, r.gain, r.bias, r.noise, r.occluder};
    d.seed = seed + i;
    out.push_back(d);
  }
  return out;
}

std::vector<DomainSpec> default_semantic_domains(std::uint64_t seed) {
  std::vector<DomainSpec> out;
  const Style styles[] = {Style::kSolid, Style::kOutline, Style::kQuantized, Style::kSmoothed};
  for (std::size_t i = 0; i < std::size(styles); ++i) {
    DomainSpec d;
    d.id = static_cast<int>(11 + i);
    d.name = std::string(to_string(styles[i]));
    d.kind = ShiftKind::kSemantic;
    d.style = styles[i];
    d.seed = seed + i;
    out.push_back(d);
  }
  return out;
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& data, double fraction,
                                            std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, ErrorCode::kOutOfRange,
          "split fraction must lie in (0, 1), got " + std::to_string(fraction));
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int label = data.labels[i];
    require(label >= 0 && static_cast<std::size_t>(label) < data.num_classes,
            ErrorCode::kOutOfRange, "label " + std::to_string(label) + " out of range");
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    require(idx.size() >= 2, ErrorCode::kInvalidArgument,
            "class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                " sample; a split needs at least 2 per class");
    Rng rng(derive_seed({seed, c, 0x5B17}));
    rng.shuffle(idx.begin(), idx.end());
    auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    val.insert(val.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {data.subset(train), data.subset(val)};
}

Stream stream_batches(std::span<const Dataset> domains, std::size_t batch_size,
                      std::uint64_t epoch_seed) {
  require(!domains.empty(), ErrorCode::kInvalidArgument, "stream needs at least one domain");
  require(batch_size >= 2, ErrorCode::kInvalidArgument,
          "batch size must be at least 2, got " + std::to_string(batch_size));
  Stream out;
  for (std::size_t d = 0; d < domains.size(); ++d) {
    const Dataset& data = domains[d];
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed({epoch_seed, d, 0x57AE}));
    rng.shuffle(order.begin(), order.end());
    std::size_t index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t n = std::min(batch_size, order.size() - start);
      if (n < 2) {
        out.dropped_samples += n;
        continue;
      }
      Batch b;
      const std::span<const std::size_t> pick(order.data() + start, n);
      b.images = gather_images(data, pick);
      for (auto i : pick) b.labels.push_back(data.labels[i]);
      b.domain_id = data.domain_id;
      b.batch_index = index++;
      out.batches.push_back(std::move(b));
    }
  }
  return out;
}

}  // namespace cta
