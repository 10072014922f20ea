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

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Test-time adaptation experiments on a synthetic shift benchmark"};
  app.require_subcommand(1);

  cta::cli::RunOptions options;
  std::string config_path, output_dir, data_root;
  std::uint64_t seed = 0;
  static const std::map<std::string, std::string> kHelp = {
      {"train-source", "train source models, one checkpoint per seed"},
      {"adapt-short", "one pass over the target stream per adapter and seed"},
      {"adapt-long", "repeat the target stream for protocol.epochs epochs"},
      {"sweep", "target accuracy across batch sizes"},
      {"inspect", "confidence chart on the first batch of one domain"},
      {"ingest-check", "read a PNM image folder and report its domains"},
  };
  for (const char* name : cta::cli::kSubcommands) {
    CLI::App* sub = app.add_subcommand(name, kHelp.at(name));
    sub->add_option("--config", config_path, "experiment config (JSON)")
        ->check(CLI::ExistingFile);
    sub->add_option("--output-dir", output_dir, "run registry root (default: config, $CTA_OUTPUT_DIR, ./runs)");
    sub->add_option("--seed", seed, "override master_seed");
    sub->add_option("--parallel-seeds", options.parallel_seeds, "seed replicas run concurrently")
        ->check(CLI::PositiveNumber);
    sub->add_flag("-v,--verbose", options.verbose, "progress on stderr");
    if (std::string(name) == "ingest-check")
      sub->add_option("--data", data_root, "dataset root: <root>/<domain>/<class>/*.ppm")->required();
    sub->callback([&, sub] { options.subcommand = sub->get_name(); });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (!config_path.empty()) options.config_path = config_path;
  if (!output_dir.empty()) options.output_dir = output_dir;
  if (!data_root.empty()) options.data_root = data_root;
  if (app.get_subcommand(options.subcommand)->count("--seed") > 0) options.seed = seed;

  const cta::cli::RunResult result = cta::cli::execute_run(options, std::cout, std::cerr);
  if (result.exit_code != 0) std::cerr << "cta " << options.subcommand << ": " << result.message << "\n";
  return result.exit_code;
}
