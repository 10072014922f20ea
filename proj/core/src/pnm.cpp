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

#include "cta/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cta/error.hpp"

namespace cta {

namespace {

class HeaderParser {
 public:
  HeaderParser(const std::string& bytes, const std::string& origin)
      : bytes_(bytes), origin_(origin) {}

  std::size_t number(const char* what) {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      require(value <= 1u << 20, ErrorCode::kFormat, origin_ + ": " + what + " too large");
      ++pos_;
      ++digits;
    }
    require(digits > 0, ErrorCode::kFormat, origin_ + ": missing " + what + " in header");
    return value;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    require(pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_])),
            ErrorCode::kFormat, origin_ + ": header not terminated");
    return pos_ + 1;
  }

  std::size_t pos_ = 2;

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  const std::string& origin_;
};

}  // namespace

PnmImage decode_pnm(const std::string& bytes, const std::string& origin) {
  require(bytes.size() >= 2 && bytes[0] == 'P', ErrorCode::kFormat,
          origin + ": not a PNM image");
  PnmImage img;
  if (bytes[1] == '5') {
    img.channels = 1;
  } else if (bytes[1] == '6') {
    img.channels = 3;
  } else {
    fail(ErrorCode::kFormat, origin + ": unsupported PNM variant P" + std::string(1, bytes[1]) +
                                 " (binary P5 and P6 only)");
  }
  HeaderParser header(bytes, origin);
  img.width = header.number("width");
  img.height = header.number("height");
  const std::size_t maxval = header.number("maxval");
  require(img.width > 0 && img.height > 0, ErrorCode::kFormat, origin + ": empty image");
  require(maxval == 255, ErrorCode::kFormat,
          origin + ": maxval " + std::to_string(maxval) + " unsupported (only 255)");
  const std::size_t start = header.raster_start();
  const std::size_t need = img.width * img.height * img.channels;
  require(bytes.size() >= start + need, ErrorCode::kFormat,
          origin + ": raster truncated (" + std::to_string(bytes.size() - std::min(start, bytes.size())) +
              " of " + std::to_string(need) + " bytes)");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                    bytes.begin() + static_cast<std::ptrdiff_t>(start + need));
  return img;
}

std::string encode_pnm(const PnmImage& image) {
  require(image.channels == 1 || image.channels == 3, ErrorCode::kInvalidArgument,
          "PNM images have 1 or 3 channels, got " + std::to_string(image.channels));
  require(image.pixels.size() == image.width * image.height * image.channels,
          ErrorCode::kShapeMismatch, "pixel buffer does not match image size");
  std::string out = (image.channels == 1 ? "P5\n" : "P6\n") + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

PnmImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_pnm(buf.str(), path.string());
}

void write_pnm(const PnmImage& image, const std::filesystem::path& path) {
  const std::string bytes = encode_pnm(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "short write to " + path.string());
}

std::vector<float> to_planar(const PnmImage& image, std::size_t out_channels,
                             std::size_t out_height, std::size_t out_width) {
  require(image.channels == out_channels || image.channels == 1, ErrorCode::kInvalidArgument,
          "cannot map " + std::to_string(image.channels) + " channel(s) to " +
              std::to_string(out_channels));
  require(out_height > 0 && out_width > 0, ErrorCode::kInvalidArgument, "empty output size");
  const auto sample = [&](std::size_t c, std::size_t y, std::size_t x) {
    return static_cast<double>(image.pixels[(y * image.width + x) * image.channels + c]);
  };
  // Pixel-center aligned source coordinate, clamped to the border.
  const auto source = [](std::size_t dst, std::size_t in, std::size_t out, std::size_t& i0,
                         std::size_t& i1, double& frac) {
    double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    i0 = static_cast<std::size_t>(std::floor(s));
    i1 = std::min(i0 + 1, in - 1);
    frac = s - static_cast<double>(i0);
  };
  std::vector<float> out(out_channels * out_height * out_width);
  for (std::size_t y = 0; y < out_height; ++y) {
    std::size_t y0, y1;
    double fy;
    source(y, image.height, out_height, y0, y1, fy);
    for (std::size_t x = 0; x < out_width; ++x) {
      std::size_t x0, x1;
      double fx;
      source(x, image.width, out_width, x0, x1, fx);
      for (std::size_t c = 0; c < out_channels; ++c) {
        const std::size_t sc = image.channels == 1 ? 0 : c;
        const double top = sample(sc, y0, x0) * (1.0 - fx) + sample(sc, y0, x1) * fx;
        const double bottom = sample(sc, y1, x0) * (1.0 - fx) + sample(sc, y1, x1) * fx;
        const double v = top * (1.0 - fy) + bottom * fy;
        out[(c * out_height + y) * out_width + x] = static_cast<float>(v / 255.0);
      }
    }
  }
  return out;
}

PnmImage from_planar(const float* planar, std::size_t channels, std::size_t height,
                     std::size_t width) {
  require(channels == 1 || channels == 3, ErrorCode::kInvalidArgument,
          "PNM images have 1 or 3 channels, got " + std::to_string(channels));
  PnmImage img{width, height, channels, std::vector<std::uint8_t>(width * height * channels)};
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < height * width; ++i) {
      const double v = std::clamp(static_cast<double>(planar[c * height * width + i]), 0.0, 1.0);
      img.pixels[i * channels + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return img;
}

}  // namespace cta
