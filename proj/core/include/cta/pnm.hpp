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
#include <filesystem>
#include <string>
#include <vector>

namespace cta {

// 8-bit interleaved image decoded from binary PGM (P5, 1 channel) or
// PPM (P6, 3 channels). Only maxval 255 is accepted.
struct PnmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;  // row-major, channels interleaved

  bool operator==(const PnmImage&) const = default;
};

PnmImage decode_pnm(const std::string& bytes, const std::string& origin = "<memory>");
std::string encode_pnm(const PnmImage& image);

PnmImage read_pnm(const std::filesystem::path& path);
void write_pnm(const PnmImage& image, const std::filesystem::path& path);

// Planar float image (C x H x W in [0, 1]) with pixel-center bilinear
// resampling; same-size resampling is the identity.
std::vector<float> to_planar(const PnmImage& image, std::size_t out_channels,
                             std::size_t out_height, std::size_t out_width);
PnmImage from_planar(const float* planar, std::size_t channels, std::size_t height,
                     std::size_t width);

}  // namespace cta
