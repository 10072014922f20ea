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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cta/adapt.hpp"
#include "cta/dataset.hpp"
#include "cta/model.hpp"

namespace cta {

enum class ProtocolKind { kShort, kLong, kSweep };

std::string_view to_string(ProtocolKind kind);
ProtocolKind protocol_kind_from_string(std::string_view name);

inline constexpr std::size_t kDefaultBatchSize = 128;

struct ProtocolSpec {
  ProtocolKind kind = ProtocolKind::kShort;
  std::vector<int> source_ids;
  std::vector<int> target_ids;  // stream order
  std::size_t batch_size = kDefaultBatchSize;
  std::size_t epochs = 1;  // long-term only
  std::vector<std::size_t> batch_sizes{2, 4, 8, 16, 32, 64, 128, 256};  // sweep only
  std::vector<std::uint64_t> seeds{0, 1, 2};
  AdapterConfig adapter;

  void validate() const;
};

// Evaluation data for one run: held-out source validation sets and the
// target domains in stream order.
struct ProtocolData {
  std::vector<Dataset> source_val;
  std::vector<Dataset> targets;
};

struct StageResult {
  std::string name;
  int domain_id = -1;  // -1 for the combined source-validation stage
  std::size_t epoch = 0;
  bool is_source = false;
  double accuracy = 0.0;  // percent

  bool operator==(const StageResult&) const = default;
};

struct EpochSummary {
  std::size_t epoch = 0;
  double target_mean = 0.0;  // percent
  double source_post = 0.0;  // percent
  double forget_rate = 0.0;  // points, source_pre - source_post

  bool operator==(const EpochSummary&) const = default;
};

struct TelemetryRow {
  std::size_t epoch = 0;
  int domain_id = 0;
  std::size_t batch_index = 0;
  double mean_entropy = 0.0;
  double batch_accuracy = 0.0;  // percent
  bool skipped = false;

  bool operator==(const TelemetryRow&) const = default;
};

struct RunReport {
  ProtocolKind kind = ProtocolKind::kShort;
  std::string adapter;
  std::uint64_t seed = 0;
  std::vector<StageResult> stages;
  double source_pre = 0.0;
  std::vector<EpochSummary> epochs;
  double mean_accuracy = 0.0;  // over every stage, both source stages included
  double forget_rate = 0.0;    // final epoch
  std::vector<TelemetryRow> telemetry;
  double wall_seconds = 0.0;

  double target_mean(std::size_t epoch_index = 0) const { return epochs.at(epoch_index).target_mean; }
};

// Pre-stage source evaluation, one adaptation pass over the targets, and a
// post-stage source evaluation. Source stages never update the adapter.
RunReport run_short_term(const ProtocolSpec& spec, const Model<float>& model,
                         const ProtocolData& data, std::uint64_t seed);

// Repeats the target pass `epochs` times with a fresh within-domain shuffle;
// after each pass the source set is scored on a throwaway copy of the adapter.
RunReport run_long_term(const ProtocolSpec& spec, const Model<float>& model,
                        const ProtocolData& data, std::uint64_t seed);

struct SweepPoint {
  std::size_t batch_size = 0;
  double source_accuracy = 0.0;  // percent, mean over domains
  double bn_accuracy = 0.0;
  double gain = 0.0;  // bn - source, points; may be negative
  std::vector<double> domain_source;  // per domain, same order as SweepReport::domain_ids
  std::vector<double> domain_bn;
  std::vector<double> domain_gain;
  bool negative = false;
};

struct SweepReport {
  std::uint64_t seed = 0;
  std::vector<int> domain_ids;
  std::vector<SweepPoint> points;
};

// Source vs BN accuracy on every source-val and target domain per batch size.
SweepReport run_batch_sweep(const ProtocolSpec& spec, const Model<float>& model,
                            const ProtocolData& data, std::uint64_t seed);

struct StageAggregate {
  std::string name;
  int domain_id = -1;
  std::size_t epoch = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct AggregateReport {
  std::string adapter;
  std::size_t seed_count = 0;
  std::vector<StageAggregate> stages;
  double mean_accuracy = 0.0;
  double mean_accuracy_std = 0.0;
  std::vector<double> epoch_target_mean;
  std::vector<double> epoch_forget_rate;
  double forget_rate = 0.0;
  double forget_rate_std = 0.0;
};

AggregateReport aggregate_seeds(std::span<const RunReport> reports);

struct SweepAggregate {
  std::vector<std::size_t> batch_sizes;
  std::vector<double> gain_mean;
  std::vector<double> gain_std;
  std::size_t seed_count = 0;
};

SweepAggregate aggregate_sweeps(std::span<const SweepReport> reports);

// Predictions of one adapter for a batch, for the confidence chart.
struct ConfidenceSeries {
  std::string label;
  Tensor<float> probs;  // batch_size x n
};

inline constexpr std::size_t kMaxChartSamples = 16;

// One row per series and one panel per selected sample; the bar of the
// correct class is drawn in a distinct fill. Raw vectors go to csv_path
// with columns adapter,sample,class,confidence,is_correct.
void export_confidence_chart(std::span<const ConfidenceSeries> series, const Batch& batch,
                             std::span<const std::size_t> sample_indices,
                             const std::filesystem::path& svg_path,
                             const std::filesystem::path& csv_path);

// CSV columns: run_id,seed,adapter,stage_index,stage_name,accuracy,forget_rate,epoch
void write_results_csv(std::ostream& out, std::string_view run_id,
                       std::span<const RunReport> reports, bool header = true);
// CSV columns: run_id,epoch,domain_id,batch_index,mean_entropy,batch_accuracy
void write_telemetry_csv(std::ostream& out, std::string_view run_id,
                         std::span<const RunReport> reports, bool header = true);
void write_aggregate_csv(std::ostream& out, std::span<const AggregateReport> aggregates);
void write_sweep_csv(std::ostream& out, std::string_view run_id,
                     std::span<const SweepReport> reports);

// Gain-versus-batch-size curve.
std::string render_sweep_svg(const SweepAggregate& sweep);
// Target accuracy and forget rate per epoch, one line per adapter.
std::string render_long_term_svg(std::span<const AggregateReport> aggregates);

}  // namespace cta
