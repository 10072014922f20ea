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

// Procedural rendering of the ten shape classes and of the domain shifts.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cta/error.hpp"
#include "cta/rng.hpp"
#include "cta/shiftgen.hpp"

namespace cta {

namespace {

constexpr std::size_t kPixels = kImageSize * kImageSize;
constexpr double kPi = std::numbers::pi;

struct Vec2 {
  double x;
  double y;
};

double length(Vec2 p) { return std::hypot(p.x, p.y); }

double box(Vec2 p, double bx, double by) {
  const double qx = std::abs(p.x) - bx;
  const double qy = std::abs(p.y) - by;
  return std::hypot(std::max(qx, 0.0), std::max(qy, 0.0)) + std::min(std::max(qx, qy), 0.0);
}

double triangle(Vec2 p, double r) {
  const double k = std::sqrt(3.0);
  p.x = std::abs(p.x) - r;
  p.y = -p.y + r / k;  // apex points up in image coordinates
  if (p.x + k * p.y > 0.0) p = {(p.x - k * p.y) / 2.0, (-k * p.x - p.y) / 2.0};
  p.x -= std::clamp(p.x, -2.0 * r, 0.0);
  return -length(p) * (p.y < 0.0 ? -1.0 : 1.0);
}

double star(Vec2 p) {
  constexpr double kOuter = 0.98;
  constexpr double kInner = 0.42;
  const double sector = 2.0 * kPi / 5.0;
  double phi = std::atan2(p.x, -p.y);
  if (phi < 0.0) phi += 2.0 * kPi;
  const double t = std::fmod(phi, sector) / sector;
  const double r = kInner + (kOuter - kInner) * std::abs(2.0 * t - 1.0);
  return 0.7 * (length(p) - r);
}

double wave(Vec2 p) {
  const double along = std::abs(p.x) - 0.95;
  const double across = std::abs(p.y - 0.38 * std::sin(2.0 * kPi * p.x)) - 0.2;
  return std::max(along, 0.75 * across);
}

// Signed distance in shape units; negative inside. Shapes fit in [-1, 1]^2.
double shape_distance(ShapeClass shape, Vec2 p) {
  switch (shape) {
    case ShapeClass::kCircle: return length(p) - 0.85;
    case ShapeClass::kSquare: return box(p, 0.72, 0.72);
    case ShapeClass::kTriangle: return triangle({p.x, p.y - 0.15}, 0.95);
    case ShapeClass::kCross: return std::min(box(p, 0.92, 0.24), box(p, 0.24, 0.92));
    case ShapeClass::kStar: return star(p);
    case ShapeClass::kRing: return std::abs(length(p) - 0.7) - 0.2;
    case ShapeClass::kBar: return box(p, 0.95, 0.22);
    case ShapeClass::kEll:
      return std::min(box({p.x + 0.55, p.y}, 0.22, 0.92), box({p.x + 0.05, p.y - 0.7}, 0.72, 0.22));
    case ShapeClass::kDiamond: return (std::abs(p.x) + std::abs(p.y) - 0.98) / std::sqrt(2.0);
    case ShapeClass::kWave: return wave(p);
  }
  return 1.0;
}

struct Geometry {
  ShapeClass shape;
  double cx, cy, scale, angle;
  std::array<double, 3> color;
};

Geometry sample_geometry(std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed({seed, index, 0x6E03}));
  Geometry g;
  g.shape = static_cast<ShapeClass>(index % kShapeClasses);
  g.cx = 16.0 + rng.uniform(-3.5, 3.5);
  g.cy = 16.0 + rng.uniform(-3.5, 3.5);
  g.scale = rng.uniform(8.5, 11.5);
  g.angle = rng.uniform(-0.3, 0.3);
  for (auto& c : g.color) c = rng.uniform(0.55, 1.0);
  return g;
}

// Signed distance in pixels for every pixel center.
std::vector<double> distance_field(const Geometry& g) {
  std::vector<double> d(kPixels);
  const double c = std::cos(g.angle);
  const double s = std::sin(g.angle);
  for (std::size_t y = 0; y < kImageSize; ++y) {
    for (std::size_t x = 0; x < kImageSize; ++x) {
      const double dx = (static_cast<double>(x) + 0.5 - g.cx) / g.scale;
      const double dy = (static_cast<double>(y) + 0.5 - g.cy) / g.scale;
      const Vec2 u{c * dx + s * dy, -s * dx + c * dy};
      d[y * kImageSize + x] = shape_distance(g.shape, u) * g.scale;
    }
  }
  return d;
}

double coverage(double distance_px) { return std::clamp(0.5 - distance_px, 0.0, 1.0); }

void box_blur(std::vector<double>& m) {
  std::vector<double> out(kPixels);
  const int n = static_cast<int>(kImageSize);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double sum = 0.0;
      int count = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy;
          const int xx = x + dx;
          if (yy < 0 || yy >= n || xx < 0 || xx >= n) continue;
          sum += m[static_cast<std::size_t>(yy * n + xx)];
          ++count;
        }
      }
      out[static_cast<std::size_t>(y * n + x)] = sum / count;
    }
  }
  m = std::move(out);
}

using Planes = std::array<std::vector<double>, 3>;

Planes blank(double r, double g, double b) {
  return {std::vector<double>(kPixels, r), std::vector<double>(kPixels, g),
          std::vector<double>(kPixels, b)};
}

void composite(Planes& img, const std::vector<double>& mask, const std::array<double, 3>& color) {
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < kPixels; ++i)
      img[c][i] = mask[i] * color[c] + (1.0 - mask[i]) * img[c][i];
}

void render_contextual(const ContextualParams& p, const Geometry& g,
                       const std::vector<double>& dist, Rng& rng, Planes& img) {
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  const double orient = rng.uniform(0.0, kPi);
  const double kx = std::cos(orient) * 2.0 * kPi * p.texture_frequency / kImageSize;
  const double ky = std::sin(orient) * 2.0 * kPi * p.texture_frequency / kImageSize;
  for (std::size_t y = 0; y < kImageSize; ++y) {
    for (std::size_t x = 0; x < kImageSize; ++x) {
      double level = p.background_level;
      if (p.texture_frequency > 0.0)
        level *= 0.5 + 0.5 * std::sin(kx * static_cast<double>(x) + ky * static_cast<double>(y) + phase);
      for (auto& plane : img) plane[y * kImageSize + x] = level;
    }
  }
  std::vector<double> mask(kPixels);
  for (std::size_t i = 0; i < kPixels; ++i) mask[i] = coverage(dist[i]);
  composite(img, mask, g.color);

  if (p.occluder_fraction > 0.0) {
    const double area = p.occluder_fraction * static_cast<double>(kPixels);
    const double aspect = rng.uniform(0.5, 2.0);
    const double w = std::min(std::sqrt(area * aspect), static_cast<double>(kImageSize));
    const double h = std::min(area / w, static_cast<double>(kImageSize));
    const double x0 = rng.uniform(0.0, kImageSize - w);
    const double y0 = rng.uniform(0.0, kImageSize - h);
    const double shade = rng.uniform(0.8, 1.1);
    const std::array<double, 3> skin{0.85 * shade, 0.64 * shade, 0.52 * shade};
    std::vector<double> occ(kPixels);
    for (std::size_t y = 0; y < kImageSize; ++y) {
      for (std::size_t x = 0; x < kImageSize; ++x) {
        const double px = static_cast<double>(x) + 0.5;
        const double py = static_cast<double>(y) + 0.5;
        const bool inside = px >= x0 && px < x0 + w && py >= y0 && py < y0 + h;
        occ[y * kImageSize + x] = inside ? 1.0 : 0.0;
      }
    }
    composite(img, occ, skin);
  }

  for (std::size_t c = 0; c < 3; ++c) {
    for (auto& v : img[c]) {
      v = p.gain[c] * v + p.bias[c];
      if (p.noise_sigma > 0.0) v += p.noise_sigma * rng.normal();
    }
  }
}

void render_semantic(Style style, const Geometry& g, const std::vector<double>& dist, Rng& rng,
                     Planes& img) {
  std::vector<double> mask(kPixels);
  switch (style) {
    case Style::kSolid: {
      img = blank(0.0, 0.0, 0.0);
      for (std::size_t i = 0; i < kPixels; ++i) mask[i] = coverage(dist[i]);
      composite(img, mask, g.color);
      break;
    }
    case Style::kOutline: {
      // Pen strokes tracing the inside of the contour on a dark sheet.
      const double sheet = rng.uniform(0.02, 0.15);
      img = blank(sheet, sheet, sheet);
      for (std::size_t i = 0; i < kPixels; ++i)
        mask[i] = std::clamp(1.8 - std::abs(dist[i] + 1.3), 0.0, 1.0);
      composite(img, mask, g.color);
      break;
    }
    case Style::kQuantized: {
      // Flat two-level palette with a heavy black border on a tinted backdrop.
      static constexpr std::array<std::array<double, 3>, 4> kBackdrops{
          {{0.12, 0.1, 0.05}, {0.05, 0.08, 0.12}, {0.06, 0.12, 0.06}, {0.12, 0.06, 0.08}}};
      const auto& bg = kBackdrops[rng.below(kBackdrops.size())];
      img = blank(bg[0], bg[1], bg[2]);
      std::array<double, 3> flat;
      for (std::size_t c = 0; c < 3; ++c) flat[c] = g.color[c] > 0.78 ? 1.0 : 0.45;
      for (std::size_t i = 0; i < kPixels; ++i) mask[i] = dist[i] < 0.0 ? 1.0 : 0.0;
      composite(img, mask, flat);
      for (std::size_t i = 0; i < kPixels; ++i)
        mask[i] = (dist[i] > -1.5 && dist[i] < 0.5) ? 1.0 : 0.0;
      composite(img, mask, {0.0, 0.0, 0.0});
      break;
    }
    case Style::kSmoothed: {
      // Soft edges and brushy color on a canvas.
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      for (std::size_t c = 0; c < 3; ++c) img[c].assign(kPixels, 0.0);
      for (std::size_t y = 0; y < kImageSize; ++y) {
        for (std::size_t x = 0; x < kImageSize; ++x) {
          const double grain =
              0.06 * std::sin(0.9 * static_cast<double>(x) + 0.4 * static_cast<double>(y) + phase);
          img[0][y * kImageSize + x] = 0.1 + grain;
          img[1][y * kImageSize + x] = 0.08 + grain;
          img[2][y * kImageSize + x] = 0.06 + grain;
        }
      }
      for (std::size_t i = 0; i < kPixels; ++i) mask[i] = coverage(dist[i]);
      for (int pass = 0; pass < 3; ++pass) box_blur(mask);
      std::array<double, 3> paint;
      for (std::size_t c = 0; c < 3; ++c) paint[c] = g.color[c] * rng.uniform(0.75, 1.0);
      composite(img, mask, paint);
      for (auto& plane : img)
        for (auto& v : plane) v += 0.04 * rng.normal();
      break;
    }
  }
}

}  // namespace

std::vector<float> render_shape_mask(std::uint64_t seed, std::size_t index) {
  const auto dist = distance_field(sample_geometry(seed, index));
  std::vector<float> mask(kPixels);
  for (std::size_t i = 0; i < kPixels; ++i) mask[i] = static_cast<float>(coverage(dist[i]));
  return mask;
}

std::vector<float> render_sample(const DomainSpec& spec, std::size_t index) {
  const Geometry g = sample_geometry(spec.seed, index);
  const auto dist = distance_field(g);
  Rng rng(derive_seed({spec.seed, static_cast<std::uint64_t>(spec.id), index, 0x5F1F7}));
  Planes img = blank(0.0, 0.0, 0.0);
  switch (spec.kind) {
    case ShiftKind::kIdentity: render_semantic(Style::kSolid, g, dist, rng, img); break;
    case ShiftKind::kContextual: render_contextual(spec.contextual, g, dist, rng, img); break;
    case ShiftKind::kSemantic: render_semantic(spec.style, g, dist, rng, img); break;
  }
  std::vector<float> out(kImageChannels * kPixels);
  for (std::size_t c = 0; c < kImageChannels; ++c)
    for (std::size_t i = 0; i < kPixels; ++i)
      out[c * kPixels + i] = static_cast<float>(std::clamp(img[c][i], 0.0, 1.0));
  return out;
}

}  // namespace cta
