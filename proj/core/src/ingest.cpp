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
#include <cstring>

#include "cta/error.hpp"
#include "cta/pnm.hpp"
#include "cta/shiftgen.hpp"

namespace cta {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> sorted_children(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const std::string name = entry.path().filename().string();
    if (name.empty() || name[0] == '.') continue;
    if (entry.is_directory() == directories) out.push_back(entry.path());
  }
  require(!ec, ErrorCode::kIo, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> names_of(const std::vector<fs::path>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(p.filename().string());
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

std::string padded(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

}  // namespace

std::vector<Dataset> ingest_folder(const fs::path& root) {
  require(fs::is_directory(root), ErrorCode::kNotFound, "dataset root " + root.string() +
                                                            " is not a directory");
  const auto domain_dirs = sorted_children(root, true);
  require(!domain_dirs.empty(), ErrorCode::kFormat,
          root.string() + ": no domain directories found");

  std::vector<std::string> class_names;
  std::vector<Dataset> out;
  for (std::size_t d = 0; d < domain_dirs.size(); ++d) {
    const auto class_dirs = sorted_children(domain_dirs[d], true);
    const auto names = names_of(class_dirs);
    require(!names.empty(), ErrorCode::kFormat, domain_dirs[d].string() + ": no class directories");
    if (d == 0) {
      class_names = names;
    } else {
      require(names == class_names, ErrorCode::kFormat,
              domain_dirs[d].string() + ": classes {" + join(names) + "} differ from {" +
                  join(class_names) + "} in " + domain_dirs[0].string());
    }

    std::vector<float> pixels;
    std::vector<int> labels;
    for (std::size_t c = 0; c < class_dirs.size(); ++c) {
      const auto files = sorted_children(class_dirs[c], false);
      require(!files.empty(), ErrorCode::kFormat, class_dirs[c].string() + ": empty class directory");
      for (const auto& file : files) {
        const std::string ext = file.extension().string();
        require(ext == ".pgm" || ext == ".ppm" || ext == ".pnm", ErrorCode::kFormat,
                file.string() + ": unsupported image format (expected binary .pgm or .ppm)");
        const auto planar = to_planar(read_pnm(file), kImageChannels, kImageSize, kImageSize);
        pixels.insert(pixels.end(), planar.begin(), planar.end());
        labels.push_back(static_cast<int>(c));
      }
    }
    Dataset data;
    data.domain_id = static_cast<int>(d);
    data.name = domain_dirs[d].filename().string();
    data.num_classes = class_names.size();
    data.images = Tensor<float>({labels.size(), kImageChannels, kImageSize, kImageSize}, std::move(pixels));
    data.labels = std::move(labels);
    out.push_back(std::move(data));
  }
  return out;
}

void export_folder(std::span<const Dataset> domains, const fs::path& root) {
  for (const auto& data : domains) {
    require(data.images.rank() == 4, ErrorCode::kShapeMismatch, "dataset images must be rank 4");
    const std::size_t c = data.images.dim(1);
    const std::size_t h = data.images.dim(2);
    const std::size_t w = data.images.dim(3);
    const fs::path dir = root / (data.name.empty() ? "domain" + std::to_string(data.domain_id) : data.name);
    const std::size_t class_width = std::to_string(data.num_classes > 0 ? data.num_classes - 1 : 0).size();
    const std::size_t index_width = std::to_string(data.size()).size();
    for (std::size_t k = 0; k < data.size(); ++k) {
      const fs::path class_dir = dir / padded(static_cast<std::size_t>(data.labels[k]), class_width);
      std::error_code ec;
      fs::create_directories(class_dir, ec);
      require(!ec, ErrorCode::kIo, "cannot create " + class_dir.string() + ": " + ec.message());
      const float* src = data.images.raw() + k * c * h * w;
      write_pnm(from_planar(src, c, h, w), class_dir / (padded(k, index_width) + ".ppm"));
    }
  }
}

}  // namespace cta
