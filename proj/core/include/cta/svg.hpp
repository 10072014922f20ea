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

#include <sstream>
#include <string>
#include <string_view>

namespace cta {

// Minimal SVG document builder for charts.
class SvgWriter {
 public:
  SvgWriter(double width, double height);

  void rect(double x, double y, double w, double h, std::string_view fill,
            std::string_view stroke = "none");
  void line(double x1, double y1, double x2, double y2, std::string_view stroke,
            double width = 1.0);
  void polyline(const std::string& points, std::string_view stroke, double width = 1.5);
  void circle(double cx, double cy, double r, std::string_view fill);
  void text(double x, double y, std::string_view content, double size = 10.0,
            std::string_view anchor = "start");

  std::string str() const;

 private:
  double width_;
  double height_;
  std::ostringstream body_;
};

std::string xml_escape(std::string_view text);

}  // namespace cta
