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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cta/error.hpp"
#include "cta/harness.hpp"
#include "cta/svg.hpp"

namespace cta {

namespace {

constexpr std::string_view kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                         "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "short write to " + path.string());
}

struct Axes {
  double left, top, width, height;
  double x_min, x_max, y_min, y_max;

  double x(double v) const { return left + (v - x_min) / (x_max - x_min) * width; }
  double y(double v) const { return top + height - (v - y_min) / (y_max - y_min) * height; }
};

void draw_axes(SvgWriter& svg, const Axes& a, const std::string& x_label,
               const std::string& y_label, int y_ticks) {
  svg.line(a.left, a.top + a.height, a.left + a.width, a.top + a.height, "#333");
  svg.line(a.left, a.top, a.left, a.top + a.height, "#333");
  for (int i = 0; i <= y_ticks; ++i) {
    const double v = a.y_min + (a.y_max - a.y_min) * i / y_ticks;
    svg.line(a.left - 4, a.y(v), a.left + a.width, a.y(v), "#e0e0e0", 0.5);
    svg.text(a.left - 6, a.y(v) + 3, fixed(v, 1), 9, "end");
  }
  svg.text(a.left + a.width / 2, a.top + a.height + 30, x_label, 11, "middle");
  svg.text(a.left - 40, a.top - 8, y_label, 11, "start");
}

std::pair<double, double> padded_range(const std::vector<double>& values, double floor_span) {
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  const double span = std::max(hi - lo, floor_span);
  const double mid = 0.5 * (lo + hi);
  return {mid - 0.6 * span, mid + 0.6 * span};
}

}  // namespace

void export_confidence_chart(std::span<const ConfidenceSeries> series, const Batch& batch,
                             std::span<const std::size_t> sample_indices,
                             const std::filesystem::path& svg_path,
                             const std::filesystem::path& csv_path) {
  require(!series.empty(), ErrorCode::kInvalidArgument, "confidence chart needs a series");
  require(!sample_indices.empty() && sample_indices.size() <= kMaxChartSamples,
          ErrorCode::kInvalidArgument,
          "confidence chart takes 1 to " + std::to_string(kMaxChartSamples) + " samples, got " +
              std::to_string(sample_indices.size()));
  for (auto i : sample_indices)
    require(i < batch.size(), ErrorCode::kOutOfRange,
            "sample index " + std::to_string(i) + " out of range for a batch of " +
                std::to_string(batch.size()));
  const std::size_t n = series.front().probs.rank() == 2 ? series.front().probs.dim(1) : 0;
  for (const auto& s : series)
    require(s.probs.rank() == 2 && s.probs.dim(0) == batch.size() && s.probs.dim(1) == n,
            ErrorCode::kShapeMismatch,
            "series '" + s.label + "' has probabilities " + shape_string(s.probs.shape()) +
                " for a batch of " + std::to_string(batch.size()));

  constexpr double kPanelW = 110;
  constexpr double kPanelH = 70;
  constexpr double kLeft = 70;
  constexpr double kTop = 30;
  const double width = kLeft + kPanelW * static_cast<double>(sample_indices.size()) + 10;
  const double height = kTop + kPanelH * static_cast<double>(series.size()) + 20;
  SvgWriter svg(width, height);
  std::ostringstream csv;
  csv << "adapter,sample,class,confidence,is_correct\n";

  for (std::size_t col = 0; col < sample_indices.size(); ++col) {
    const std::size_t sample = sample_indices[col];
    const int truth = batch.labels[sample];
    svg.text(kLeft + kPanelW * (col + 0.5), kTop - 10,
             "#" + std::to_string(sample) + " (class " + std::to_string(truth) + ")", 9, "middle");
  }
  for (std::size_t row = 0; row < series.size(); ++row) {
    const auto& s = series[row];
    const double y0 = kTop + kPanelH * static_cast<double>(row);
    svg.text(kLeft - 8, y0 + kPanelH / 2, s.label, 11, "end");
    for (std::size_t col = 0; col < sample_indices.size(); ++col) {
      const std::size_t sample = sample_indices[col];
      const int truth = batch.labels[sample];
      const double x0 = kLeft + kPanelW * static_cast<double>(col);
      svg.rect(x0 + 4, y0 + 4, kPanelW - 8, kPanelH - 8, "#fafafa", "#cccccc");
      const double bar_w = (kPanelW - 16) / static_cast<double>(n);
      for (std::size_t c = 0; c < n; ++c) {
        const double p = s.probs[sample * n + c];
        const bool correct = static_cast<int>(c) == truth;
        const double h = p * (kPanelH - 14);
        svg.rect(x0 + 8 + bar_w * c, y0 + kPanelH - 6 - h, bar_w * 0.85, h,
                 correct ? "#2e7d32" : "#9e9e9e");
        csv << s.label << ',' << sample << ',' << c << ',' << fixed(p, 8) << ','
            << (correct ? 1 : 0) << '\n';
      }
    }
  }
  write_text(svg_path, svg.str());
  write_text(csv_path, csv.str());
}

std::string render_sweep_svg(const SweepAggregate& sweep) {
  require(!sweep.batch_sizes.empty(), ErrorCode::kInvalidArgument, "empty sweep");
  std::vector<double> ys;
  for (std::size_t i = 0; i < sweep.gain_mean.size(); ++i) {
    ys.push_back(sweep.gain_mean[i] - sweep.gain_std[i]);
    ys.push_back(sweep.gain_mean[i] + sweep.gain_std[i]);
  }
  ys.push_back(0.0);
  const auto [lo, hi] = padded_range(ys, 2.0);
  const double lx0 = std::log2(static_cast<double>(sweep.batch_sizes.front()));
  const double lx1 = std::log2(static_cast<double>(sweep.batch_sizes.back()));
  const Axes a{60, 30, 420, 240, lx0 - 0.3, std::max(lx1, lx0 + 1) + 0.3, lo, hi};
  SvgWriter svg(520, 320);
  draw_axes(svg, a, "batch size", "BN gain over Source (points)", 5);
  svg.line(a.x(a.x_min), a.y(0), a.x(a.x_max), a.y(0), "#777", 1.0);
  std::string points;
  for (std::size_t i = 0; i < sweep.batch_sizes.size(); ++i) {
    const double lx = std::log2(static_cast<double>(sweep.batch_sizes[i]));
    const double m = sweep.gain_mean[i];
    svg.line(a.x(lx), a.y(m - sweep.gain_std[i]), a.x(lx), a.y(m + sweep.gain_std[i]), "#1f77b4");
    svg.text(a.x(lx), a.y(a.y_min) + 14, std::to_string(sweep.batch_sizes[i]), 9, "middle");
    points += fixed(a.x(lx), 2) + "," + fixed(a.y(m), 2) + " ";
  }
  svg.polyline(points, "#1f77b4");
  for (std::size_t i = 0; i < sweep.batch_sizes.size(); ++i) {
    const double lx = std::log2(static_cast<double>(sweep.batch_sizes[i]));
    svg.circle(a.x(lx), a.y(sweep.gain_mean[i]), 3.5, sweep.gain_mean[i] < 0 ? "#d62728" : "#1f77b4");
  }
  svg.text(a.left + a.width, a.top - 8, std::to_string(sweep.seed_count) + " seed(s)", 9, "end");
  return svg.str();
}

std::string render_long_term_svg(std::span<const AggregateReport> aggregates) {
  require(!aggregates.empty(), ErrorCode::kInvalidArgument, "no curves to draw");
  const std::size_t epochs = aggregates.front().epoch_target_mean.size();
  require(epochs >= 1, ErrorCode::kInvalidArgument, "aggregates carry no epochs");
  std::vector<double> acc;
  std::vector<double> forget{0.0};
  for (const auto& g : aggregates) {
    acc.insert(acc.end(), g.epoch_target_mean.begin(), g.epoch_target_mean.end());
    forget.insert(forget.end(), g.epoch_forget_rate.begin(), g.epoch_forget_rate.end());
  }
  const auto [alo, ahi] = padded_range(acc, 5.0);
  const auto [flo, fhi] = padded_range(forget, 2.0);
  const double x_max = static_cast<double>(std::max<std::size_t>(epochs, 2));
  const Axes top{60, 30, 440, 180, 1, x_max, alo, ahi};
  const Axes bottom{60, 270, 440, 140, 1, x_max, flo, fhi};
  SvgWriter svg(640, 460);
  draw_axes(svg, top, "", "target accuracy (%)", 4);
  draw_axes(svg, bottom, "epoch", "forget rate (points)", 4);
  for (std::size_t e = 1; e <= epochs; ++e)
    svg.text(bottom.x(static_cast<double>(e)), bottom.top + bottom.height + 14, std::to_string(e), 9,
             "middle");
  for (std::size_t k = 0; k < aggregates.size(); ++k) {
    const auto& g = aggregates[k];
    const auto color = kPalette[k % std::size(kPalette)];
    std::string tp;
    std::string fp;
    for (std::size_t e = 0; e < g.epoch_target_mean.size(); ++e) {
      const double x = static_cast<double>(e + 1);
      tp += fixed(top.x(x), 2) + "," + fixed(top.y(g.epoch_target_mean[e]), 2) + " ";
      fp += fixed(bottom.x(x), 2) + "," + fixed(bottom.y(g.epoch_forget_rate[e]), 2) + " ";
    }
    svg.polyline(tp, color);
    svg.polyline(fp, color);
    svg.rect(520, 40 + 18 * static_cast<double>(k), 12, 12, color);
    svg.text(538, 50 + 18 * static_cast<double>(k), g.adapter, 11);
  }
  return svg.str();
}

}  // namespace cta
