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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace cta::cli {

inline constexpr const char* kSubcommands[] = {"train-source", "adapt-short", "adapt-long",
                                               "sweep",        "inspect",     "ingest-check"};

struct RunOptions {
  std::string subcommand;
  std::optional<std::filesystem::path> config_path;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> data_root;  // ingest-check
  std::optional<std::uint64_t> seed;               // overrides master_seed
  std::size_t parallel_seeds = 1;
  bool verbose = false;
};

struct RunResult {
  int exit_code = 0;
  std::filesystem::path run_dir;
  std::string message;
};

// Resolves the output directory: flag, then config, then CTA_OUTPUT_DIR,
// then "runs".
std::filesystem::path resolve_output_dir(const RunOptions& options, const ExperimentConfig& config);

// Content hash of the training-relevant parts of a config; names the
// checkpoint directory shared by every run with the same source models.
std::string training_hash(const ExperimentConfig& config);

// Held-out source validation sets and target domains exactly as the adapt
// subcommands build them for one seed.
ProtocolData protocol_data(const ExperimentConfig& config, std::uint64_t seed);

// Newest checkpoint for (config, seed) under output_dir; throws kNotFound
// naming the expected path, or kComposition on an architecture mismatch.
Model<float> find_source_model(const std::filesystem::path& output_dir,
                               const ExperimentConfig& config, std::uint64_t seed);

// Runs one subcommand. Failures are reported through the exit code and
// message; out receives the human readable summary, log the progress lines.
RunResult execute_run(const RunOptions& options, std::ostream& out, std::ostream& log);

}  // namespace cta::cli
