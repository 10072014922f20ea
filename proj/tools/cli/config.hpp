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
#include <optional>
#include <string>
#include <vector>

#include "cta/adapt.hpp"
#include "cta/error.hpp"
#include "cta/harness.hpp"
#include "cta/model.hpp"
#include "cta/optim.hpp"
#include "cta/shiftgen.hpp"

namespace cta::cli {

struct SourceTrainingConfig {
  std::size_t epochs = 12;
  std::size_t batch_size = 64;
  OptimizerConfig optimizer{OptimizerKind::kAdam, 2e-3};
  std::size_t per_class = 300;  // source domain size before the split
  double split_fraction = 0.9;
};

struct InspectConfig {
  int domain_id = -1;  // -1: first target domain
  std::size_t samples = 10;
};

struct ExperimentConfig {
  ModelSpec model = default_model_spec();
  SourceTrainingConfig source_training;
  std::vector<DomainSpec> domains;
  std::size_t target_per_class = kDefaultPerClass;
  ProtocolSpec protocol;
  std::vector<AdapterConfig> adapters;
  InspectConfig inspect;
  std::optional<std::string> output_dir;
  std::uint64_t master_seed = 0;
};

// Thrown when a config document is invalid; lists every violation found.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& path);

// Normalized JSON with every default spelled out; parsing it yields the
// same config.
std::string config_to_json(const ExperimentConfig& config);

const DomainSpec* find_domain(const ExperimentConfig& config, int id);

}  // namespace cta::cli
