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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "gtest/gtest.h"
#include "runner.hpp"

namespace cta::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

TEST(ConfigTest, MinimalConfigGetsDefaults) {
  const ExperimentConfig c = parse_config_text("{}");
  EXPECT_EQ(c.model, default_model_spec());
  EXPECT_EQ(c.domains.size(), 11u);
  EXPECT_EQ(c.protocol.source_ids, (std::vector<int>{0}));
  EXPECT_EQ(c.protocol.target_ids.size(), 10u);
  EXPECT_EQ(c.protocol.batch_size, 128u);
  EXPECT_EQ(c.protocol.seeds.size(), 3u);
  ASSERT_EQ(c.adapters.size(), 2u);
  EXPECT_EQ(c.adapters[0].method, AdaptMethod::kSource);
  EXPECT_EQ(c.master_seed, 0u);
  EXPECT_FALSE(c.output_dir.has_value());
}

TEST(ConfigTest, PresetsAndAdapterObject) {
  const ExperimentConfig c = parse_config_text(R"({
    "domains": "semantic",
    "adapter": {"method": "cotta", "learning_rate": 0.01, "restore_prob": 0.02},
    "protocol": {"kind": "long", "epochs": 4, "seeds": [7]}})");
  EXPECT_EQ(c.domains.size(), 5u);
  EXPECT_EQ(c.protocol.target_ids, (std::vector<int>{11, 12, 13, 14}));
  ASSERT_EQ(c.adapters.size(), 1u);
  EXPECT_EQ(c.adapters[0].restore_prob, 0.02);
  EXPECT_EQ(c.protocol.epochs, 4u);
  EXPECT_EQ(c.protocol.kind, ProtocolKind::kLong);
}

TEST(ConfigTest, RestoreProbabilityRangeNamesTheField) {
  const auto v = violations_of(R"({"adapter": {"method": "cotta", "learning_rate": 0.1, "restore_prob": 1.5}})");
  ASSERT_EQ(v.size(), 1u);
  EXPECT_TRUE(mentions(v, "adapter.restore_prob"));
}

TEST(ConfigTest, EveryViolationIsReportedAtOnce) {
  const auto v = violations_of(R"({"bogus": 1, "protocol": {"batch_size": 0}, "adapter": [{"method": "tent"}]})");
  EXPECT_GE(v.size(), 3u);
  EXPECT_TRUE(mentions(v, "bogus"));
  EXPECT_TRUE(mentions(v, "protocol.batch_size"));
  EXPECT_TRUE(mentions(v, "adapter[0].learning_rate"));
}

TEST(ConfigTest, MalformedAndWrongTypes) {
  EXPECT_FALSE(violations_of("{\"master_seed\": ").empty());
  EXPECT_TRUE(mentions(violations_of(R"({"master_seed": "zero"})"), "master_seed"));
  EXPECT_TRUE(mentions(violations_of(R"({"protocol": {"source_ids": [0], "target_ids": [0, 99]}})"),
                       "99"));
  EXPECT_TRUE(mentions(violations_of(R"({"model": {"layers": [{"kind": "dense", "in": 5, "out": 10}]}})"),
                       "model"));
}

TEST(ConfigTest, NormalizedJsonReparsesToTheSameConfig) {
  const ExperimentConfig c = parse_config_text(R"({"master_seed": 5, "domains": "all",
    "adapter": [{"method": "tent", "learning_rate": 0.001}]})");
  const ExperimentConfig again = parse_config_text(config_to_json(c));
  EXPECT_EQ(config_to_json(again), config_to_json(c));
}

TEST(ConfigTest, ShippedConfigsParse) {
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(CTA_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(parse_config(entry.path())) << entry.path();
    ++seen;
  }
  EXPECT_GE(seen, 3u);
}

class RunnerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("cta_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    config_ = root_ / "config.json";
    std::ofstream(config_) << R"({
      "source_training": {"epochs": 1, "per_class": 20},
      "target_per_class": 4,
      "protocol": {"source_ids": [0], "target_ids": [2, 5], "batch_size": 16, "epochs": 2,
                   "batch_sizes": [2, 8], "seeds": [0, 1]},
      "adapter": [{"method": "source"}, {"method": "bn"},
                  {"method": "tent", "learning_rate": 0.001},
                  {"method": "cotta", "learning_rate": 0.01}],
      "inspect": {"domain_id": 5, "samples": 10}})";
  }

  RunResult run(const std::string& sub) {
    RunOptions o;
    o.subcommand = sub;
    o.config_path = config_;
    o.output_dir = root_ / "runs";
    std::ostringstream out, log;
    return execute_run(o, out, log);
  }

  fs::path root_;
  fs::path config_;
};

TEST_F(RunnerTest, AdaptBeforeTrainingNamesTheCheckpoint) {
  const RunResult r = run("adapt-short");
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.message.find("checkpoints"), std::string::npos);
  EXPECT_NE(r.message.find("seed-0.ctab"), std::string::npos);
}

TEST_F(RunnerTest, FullWorkflowIsReproducible) {
  const RunResult train = run("train-source");
  ASSERT_EQ(train.exit_code, 0) << train.message;
  EXPECT_TRUE(fs::exists(train.run_dir / "config.json"));

  const RunResult a = run("adapt-short");
  const RunResult b = run("adapt-short");
  ASSERT_EQ(a.exit_code, 0) << a.message;
  ASSERT_EQ(b.exit_code, 0) << b.message;
  EXPECT_NE(a.run_dir, b.run_dir);
  EXPECT_EQ(slurp(a.run_dir / "results.csv"), slurp(b.run_dir / "results.csv"));
  EXPECT_EQ(slurp(a.run_dir / "aggregate.csv"), slurp(b.run_dir / "aggregate.csv"));
  EXPECT_TRUE(fs::exists(a.run_dir / "telemetry"));

  // Re-running from the frozen copy reproduces the results.
  config_ = a.run_dir / "config.json";
  const RunResult c = run("adapt-short");
  ASSERT_EQ(c.exit_code, 0) << c.message;
  EXPECT_EQ(slurp(c.run_dir / "results.csv"), slurp(a.run_dir / "results.csv"));

  const RunResult lt = run("adapt-long");
  ASSERT_EQ(lt.exit_code, 0) << lt.message;
  EXPECT_TRUE(fs::exists(lt.run_dir / "long_term.svg"));

  const RunResult sw = run("sweep");
  ASSERT_EQ(sw.exit_code, 0) << sw.message;
  EXPECT_NE(slurp(sw.run_dir / "sweep.csv").find("batch_size"), std::string::npos);

  const RunResult in = run("inspect");
  ASSERT_EQ(in.exit_code, 0) << in.message;
  const std::string svg = slurp(in.run_dir / "confidence.svg");
  EXPECT_EQ(count(svg, "fill=\"#fafafa\""), 40u);
  EXPECT_EQ(count(svg, "fill=\"#2e7d32\""), 40u);
}

TEST_F(RunnerTest, ArchitectureMismatchIsAnError) {
  const RunResult train = run("train-source");
  ASSERT_EQ(train.exit_code, 0);
  const ExperimentConfig original = parse_config(config_);
  std::ofstream(config_) << R"({"source_training": {"epochs": 1, "per_class": 20},
    "model": {"bn_epsilon": 0.001}, "protocol": {"batch_size": 16, "seeds": [0]}})";
  const ExperimentConfig changed = parse_config(config_);
  // Plant the old checkpoint where the changed config looks for it.
  const fs::path from = train.run_dir / "checkpoints" / training_hash(original) / "seed-0.ctab";
  const fs::path to = train.run_dir / "checkpoints" / training_hash(changed) / "seed-0.ctab";
  fs::create_directories(to.parent_path());
  fs::copy_file(from, to);
  const RunResult r = run("adapt-short");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.message.find("architecture"), std::string::npos) << r.message;
}

TEST_F(RunnerTest, BadInvocations) {
  EXPECT_EQ(run("frobnicate").exit_code, 2);
  std::ofstream(config_) << R"({"adapter": {"method": "cotta", "restore_prob": 2}})";
  const RunResult r = run("adapt-short");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.message.find("adapter.restore_prob"), std::string::npos);

  std::ofstream(config_) << "{}";
  std::ofstream(root_ / "blocker") << "file";
  RunOptions o;
  o.subcommand = "train-source";
  o.config_path = config_;
  o.output_dir = root_ / "blocker" / "runs";
  std::ostringstream out, log;
  EXPECT_NE(execute_run(o, out, log).exit_code, 0);
}

TEST_F(RunnerTest, IngestCheckReadsAFolder) {
  const auto domains = std::vector<Dataset>{generate_domain(default_contextual_domains()[1], 1)};
  export_folder(domains, root_ / "data");
  RunOptions o;
  o.subcommand = "ingest-check";
  o.data_root = root_ / "data";
  o.output_dir = root_ / "runs";
  std::ostringstream out, log;
  const RunResult r = execute_run(o, out, log);
  ASSERT_EQ(r.exit_code, 0) << r.message;
  EXPECT_NE(slurp(r.run_dir / "ingest.csv").find("dim,10,10"), std::string::npos);
}

TEST(OutputDirTest, ResolutionOrder) {
  RunOptions o;
  ExperimentConfig c;
  unsetenv("CTA_OUTPUT_DIR");
  EXPECT_EQ(resolve_output_dir(o, c), fs::path("runs"));
  setenv("CTA_OUTPUT_DIR", "/tmp/from-env", 1);
  EXPECT_EQ(resolve_output_dir(o, c), fs::path("/tmp/from-env"));
  c.output_dir = "/tmp/from-config";
  EXPECT_EQ(resolve_output_dir(o, c), fs::path("/tmp/from-config"));
  o.output_dir = "/tmp/from-flag";
  EXPECT_EQ(resolve_output_dir(o, c), fs::path("/tmp/from-flag"));
  unsetenv("CTA_OUTPUT_DIR");
}

}  // namespace
}  // namespace cta::cli
