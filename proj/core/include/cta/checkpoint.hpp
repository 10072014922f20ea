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

#include <cstdint>
#include <filesystem>
#include <string>

#include "cta/model.hpp"

namespace cta {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::uint64_t epochs = 0;
  double final_val_accuracy = 0.0;

  bool operator==(const TrainingMetadata&) const = default;
};

struct Checkpoint {
  Model<float> model;
  TrainingMetadata metadata;
};

// Layout: "CTAB", u16 version, u32 header length, JSON header (spec,
// metadata, tensor count), then per tensor: u32 name length, name, u8 rank,
// u64 dims, f32 values. All integers and floats little endian.
std::string encode_checkpoint(const Checkpoint& checkpoint,
                              std::uint16_t version = kCheckpointVersion);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cta
