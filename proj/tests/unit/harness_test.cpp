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
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "cta/error.hpp"
#include "cta/harness.hpp"
#include "cta/shiftgen.hpp"
#include "gtest/gtest.h"

namespace cta {
namespace {

namespace fs = std::filesystem;

class HarnessTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    model_ = new Model<float>(build_model<float>(default_model_spec(), 8));
    const auto ctx = default_contextual_domains();
    data_ = new ProtocolData;
    data_->source_val = {generate_domain(ctx[0], 2)};
    data_->targets = {generate_domain(ctx[3], 2), generate_domain(ctx[7], 3)};
  }
  static void TearDownTestSuite() {
    delete model_;
    delete data_;
  }

  static ProtocolSpec spec(AdaptMethod method, double lr = 0.0) {
    ProtocolSpec s;
    s.source_ids = {0};
    s.target_ids = {3, 7};
    s.batch_size = 8;
    s.batch_sizes = {2, 4, 8, 16};
    s.adapter.method = method;
    s.adapter.learning_rate = lr;
    return s;
  }

  static Model<float>* model_;
  static ProtocolData* data_;
};

Model<float>* HarnessTest::model_ = nullptr;
ProtocolData* HarnessTest::data_ = nullptr;

double stage_mean(const RunReport& r) {
  double s = 0.0;
  for (const auto& st : r.stages) s += st.accuracy;
  return s / r.stages.size();
}

TEST_F(HarnessTest, SpecValidation) {
  ProtocolSpec s = spec(AdaptMethod::kBn);
  EXPECT_NO_THROW(s.validate());
  s.target_ids = {0, 3};
  EXPECT_THROW(s.validate(), Error);
  s = spec(AdaptMethod::kBn);
  s.batch_sizes = {4, 2};
  EXPECT_THROW(s.validate(), Error);
  s = spec(AdaptMethod::kBn);
  s.batch_size = 1;
  EXPECT_THROW(s.validate(), Error);
  s = spec(AdaptMethod::kTent, -1.0);
  EXPECT_THROW(s.validate(), Error);
  EXPECT_THROW(run_short_term(s, *model_, *data_, 0), Error);
}

TEST_F(HarnessTest, ShortTermStageLayout) {
  const RunReport r = run_short_term(spec(AdaptMethod::kSource), *model_, *data_, 1);
  ASSERT_EQ(r.stages.size(), 4u);
  EXPECT_EQ(r.stages[0].name, "source-pre");
  EXPECT_EQ(r.stages[1].domain_id, 3);
  EXPECT_EQ(r.stages[2].domain_id, 7);
  EXPECT_EQ(r.stages[3].name, "source-post");
  EXPECT_EQ(r.forget_rate, 0.0);
  EXPECT_EQ(r.stages[0].accuracy, r.stages[3].accuracy);
  EXPECT_NEAR(r.mean_accuracy, stage_mean(r), 1e-9);
  // 20 samples -> 3 batches, 30 samples -> 4 batches.
  EXPECT_EQ(r.telemetry.size(), 7u);
}

TEST_F(HarnessTest, BnNeverForgets) {
  for (ProtocolKind kind : {ProtocolKind::kShort, ProtocolKind::kLong}) {
    ProtocolSpec s = spec(AdaptMethod::kBn);
    s.epochs = 3;
    const RunReport r = kind == ProtocolKind::kShort ? run_short_term(s, *model_, *data_, 2)
                                                     : run_long_term(s, *model_, *data_, 2);
    for (const auto& e : r.epochs) EXPECT_EQ(e.forget_rate, 0.0);
    EXPECT_EQ(r.forget_rate, 0.0);
  }
}

TEST_F(HarnessTest, ForgetRateIsPreMinusPost) {
  ProtocolSpec s = spec(AdaptMethod::kTent, 0.05);
  s.epochs = 2;
  const RunReport r = run_long_term(s, *model_, *data_, 3);
  for (const auto& e : r.epochs) EXPECT_EQ(e.forget_rate, r.source_pre - e.source_post);
  EXPECT_EQ(r.forget_rate, r.epochs.back().forget_rate);
  EXPECT_NEAR(r.mean_accuracy, stage_mean(r), 1e-9);
}

TEST_F(HarnessTest, FirstLongEpochReproducesShortTerm) {
  for (AdaptMethod m : {AdaptMethod::kTent, AdaptMethod::kCotta}) {
    ProtocolSpec s = spec(m, 0.01);
    s.epochs = 2;
    const RunReport shortr = run_short_term(s, *model_, *data_, 4);
    const RunReport longr = run_long_term(s, *model_, *data_, 4);
    for (std::size_t i = 0; i < shortr.stages.size(); ++i)
      EXPECT_EQ(shortr.stages[i], longr.stages[i]) << i;
    EXPECT_EQ(shortr.epochs[0], longr.epochs[0]);
  }
}

TEST_F(HarnessTest, SourceLongTermIsFlat) {
  ProtocolSpec s = spec(AdaptMethod::kSource);
  s.epochs = 3;
  const RunReport r = run_long_term(s, *model_, *data_, 5);
  ASSERT_EQ(r.epochs.size(), 3u);
  for (const auto& e : r.epochs) EXPECT_EQ(e.target_mean, r.epochs[0].target_mean);
}

TEST_F(HarnessTest, RunsAreReproducible) {
  ProtocolSpec s = spec(AdaptMethod::kCotta, 0.01);
  s.epochs = 2;
  const RunReport a = run_long_term(s, *model_, *data_, 6);
  const RunReport b = run_long_term(s, *model_, *data_, 6);
  std::ostringstream ca, cb;
  write_results_csv(ca, "x", std::span<const RunReport>(&a, 1));
  write_results_csv(cb, "x", std::span<const RunReport>(&b, 1));
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_EQ(a.telemetry, b.telemetry);
}

TEST_F(HarnessTest, SweepReportsEveryDomainAndFlagsNegatives) {
  const SweepReport r = run_batch_sweep(spec(AdaptMethod::kBn), *model_, *data_, 7);
  ASSERT_EQ(r.points.size(), 4u);
  EXPECT_EQ(r.domain_ids, (std::vector<int>{0, 3, 7}));
  for (const auto& p : r.points) {
    ASSERT_EQ(p.domain_gain.size(), 3u);
    EXPECT_EQ(p.negative, p.gain < 0.0);
    const double mean = std::accumulate(p.domain_gain.begin(), p.domain_gain.end(), 0.0) / 3.0;
    EXPECT_NEAR(p.gain, mean, 1e-9);
    EXPECT_NEAR(p.gain, p.bn_accuracy - p.source_accuracy, 1e-9);
  }
  ProtocolSpec too_big = spec(AdaptMethod::kBn);
  too_big.batch_sizes = {2, 64};
  EXPECT_THROW(run_batch_sweep(too_big, *model_, *data_, 7), Error);
}

RunReport fake_report(std::vector<double> accuracies, std::uint64_t seed) {
  RunReport r;
  r.adapter = "BN";
  r.seed = seed;
  for (std::size_t i = 0; i < accuracies.size(); ++i)
    r.stages.push_back({"s" + std::to_string(i), static_cast<int>(i), 1, false, accuracies[i]});
  r.epochs = {{1, accuracies[0], accuracies[0], 0.0}};
  r.mean_accuracy = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / accuracies.size();
  return r;
}

TEST(AggregateTest, SingleReportHasZeroSpread) {
  const RunReport r = fake_report({80.0, 60.0}, 0);
  const auto agg = aggregate_seeds(std::span<const RunReport>(&r, 1));
  EXPECT_EQ(agg.seed_count, 1u);
  EXPECT_EQ(agg.stages[1].mean, 60.0);
  EXPECT_EQ(agg.stages[1].stddev, 0.0);
}

TEST(AggregateTest, PopulationStdAndPermutationInvariance) {
  std::vector<RunReport> reports{fake_report({100.0, 1.0}, 0), fake_report({50.0, 2.0}, 1),
                                 fake_report({0.0, 3.0}, 2)};
  const auto agg = aggregate_seeds(reports);
  EXPECT_NEAR(agg.stages[0].mean, 50.0, 1e-12);
  EXPECT_NEAR(agg.stages[0].stddev, 100.0 * std::sqrt(1.0 / 6.0), 1e-9);
  EXPECT_NEAR(agg.stages[0].stddev / 100.0, 0.4082, 1e-4);
  std::vector<RunReport> permuted{reports[2], reports[0], reports[1]};
  const auto again = aggregate_seeds(permuted);
  for (std::size_t i = 0; i < agg.stages.size(); ++i) {
    EXPECT_EQ(again.stages[i].mean, agg.stages[i].mean);
    EXPECT_EQ(again.stages[i].stddev, agg.stages[i].stddev);
  }
}

TEST(AggregateTest, MismatchedStagesAreRejected) {
  std::vector<RunReport> reports{fake_report({1.0, 2.0}, 0), fake_report({1.0}, 1)};
  try {
    aggregate_seeds(reports);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(CsvTest, ResultsHeaderAndMeanRow) {
  const RunReport r = fake_report({90.0, 70.0}, 3);
  std::ostringstream out;
  write_results_csv(out, "abc", std::span<const RunReport>(&r, 1));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "run_id,seed,adapter,stage_index,stage_name,accuracy,forget_rate,epoch");
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines.back(), "abc,3,BN,2,mean,80.000000,0.000000,1");
}

TEST(ChartTest, ConfidenceChartLayoutAndCsv) {
  const fs::path dir = fs::temp_directory_path() / "cta_chart_test";
  fs::create_directories(dir);
  Batch batch;
  batch.images = Tensor<float>({3, 3, 32, 32});
  batch.labels = {2, 0, 1};
  Tensor<float> probs({3, 4}, std::vector<float>{0.1f, 0.2f, 0.6f, 0.1f, 0.7f, 0.1f, 0.1f, 0.1f,
                                                 0.25f, 0.25f, 0.25f, 0.25f});
  const std::vector<ConfidenceSeries> series{{"Source", probs}, {"BN", probs}};
  const std::vector<std::size_t> samples{0, 2};
  export_confidence_chart(series, batch, samples, dir / "c.svg", dir / "c.csv");

  std::ifstream csv(dir / "c.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "adapter,sample,class,confidence,is_correct");
  std::map<std::string, double> sums;
  std::size_t rows = 0, correct = 0;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string adapter, sample, cls, conf, ok;
    std::getline(ss, adapter, ',');
    std::getline(ss, sample, ',');
    std::getline(ss, cls, ',');
    std::getline(ss, conf, ',');
    std::getline(ss, ok, ',');
    sums[adapter + "/" + sample] += std::stod(conf);
    correct += ok == "1";
    ++rows;
  }
  EXPECT_EQ(rows, 2u * 2u * 4u);
  EXPECT_EQ(correct, 4u);
  for (const auto& [key, s] : sums) EXPECT_NEAR(s, 1.0, 1e-5) << key;

  std::ifstream svg_in(dir / "c.svg");
  const std::string svg((std::istreambuf_iterator<char>(svg_in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);

  const std::vector<std::size_t> bad{0, 5};
  EXPECT_THROW(export_confidence_chart(series, batch, bad, dir / "x.svg", dir / "x.csv"), Error);
  const std::vector<std::size_t> many(17, 0);
  EXPECT_THROW(export_confidence_chart(series, batch, many, dir / "x.svg", dir / "x.csv"), Error);
}

TEST(ChartTest, CurveChartsAreWellFormed) {
  SweepAggregate sweep{{2, 4, 8}, {-1.0, 3.0, 4.0}, {0.5, 0.2, 0.1}, 3};
  const std::string s = render_sweep_svg(sweep);
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
  AggregateReport a;
  a.adapter = "TENT";
  a.epoch_target_mean = {60.0, 58.0};
  a.epoch_forget_rate = {1.0, 2.0};
  const std::string l = render_long_term_svg(std::span<const AggregateReport>(&a, 1));
  EXPECT_NE(l.find("TENT"), std::string::npos);
}

}  // namespace
}  // namespace cta
