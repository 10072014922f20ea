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

#include "cta/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "cta/error.hpp"
#include "cta/layers.hpp"
#include "cta/numerics.hpp"
#include "cta/rng.hpp"
#include "cta/shiftgen.hpp"

namespace cta {

std::string_view to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::kShort: return "short";
    case ProtocolKind::kLong: return "long";
    case ProtocolKind::kSweep: return "sweep";
  }
  return "unknown";
}

ProtocolKind protocol_kind_from_string(std::string_view name) {
  for (auto k : {ProtocolKind::kShort, ProtocolKind::kLong, ProtocolKind::kSweep})
    if (to_string(k) == name) return k;
  fail(ErrorCode::kInvalidArgument,
       "unknown protocol '" + std::string(name) + "' (short, long, sweep)");
}

void ProtocolSpec::validate() const {
  const std::set<int> sources(source_ids.begin(), source_ids.end());
  for (int t : target_ids)
    require(!sources.contains(t), ErrorCode::kInvalidArgument,
            "domain " + std::to_string(t) + " is listed as both source and target");
  require(batch_size >= 2, ErrorCode::kOutOfRange,
          "batch size must be at least 2, got " + std::to_string(batch_size));
  require(epochs >= 1, ErrorCode::kOutOfRange, "epoch count must be at least 1");
  require(!seeds.empty(), ErrorCode::kInvalidArgument, "at least one seed is required");
  for (std::size_t i = 0; i < batch_sizes.size(); ++i) {
    require(batch_sizes[i] >= 2, ErrorCode::kOutOfRange,
            "sweep batch sizes must be at least 2, got " + std::to_string(batch_sizes[i]));
    require(i == 0 || batch_sizes[i] > batch_sizes[i - 1], ErrorCode::kInvalidArgument,
            "sweep batch sizes must be sorted ascending without repeats");
  }
  adapter.validate();
}

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSourceOrderTag = 0x50C7;
constexpr std::uint64_t kEpochTag = 0xE90C;
constexpr std::uint64_t kAdapterTag = 0xADA;

void check_data(const ProtocolData& data) {
  require(!data.source_val.empty(), ErrorCode::kInvalidArgument,
          "protocol needs a source validation set");
  require(!data.targets.empty(), ErrorCode::kInvalidArgument, "protocol needs target domains");
  std::set<int> sources;
  for (const auto& d : data.source_val) sources.insert(d.domain_id);
  for (const auto& d : data.targets)
    require(!sources.contains(d.domain_id), ErrorCode::kInvalidArgument,
            "domain " + std::to_string(d.domain_id) + " is both a source and a target");
}

std::size_t count_correct(const Tensor<float>& probs, const std::vector<int>& labels) {
  const auto pred = argmax_rows(probs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += pred[i] == labels[i];
  return correct;
}

double percent(std::size_t correct, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

// Read-only pass over the source validation sets in a fixed order.
double score_source(const Adapter& adapter, const ProtocolData& data, std::size_t batch_size,
                    std::uint64_t seed) {
  const Stream stream = stream_batches(data.source_val, batch_size, derive_seed({seed, kSourceOrderTag}));
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& b : stream.batches) {
    correct += count_correct(adapter.infer(b.images), b.labels);
    total += b.size();
  }
  return percent(correct, total);
}

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

RunReport run_protocol(const ProtocolSpec& spec, ProtocolKind kind, std::size_t epochs,
                       const Model<float>& model, const ProtocolData& data, std::uint64_t seed) {
  spec.validate();
  check_data(data);
  const auto start = Clock::now();

  AdapterConfig config = spec.adapter;
  config.seed = derive_seed({spec.adapter.seed, seed, kAdapterTag});
  Adapter adapter = make_adapter(model, config);

  RunReport report;
  report.kind = kind;
  report.adapter = config.label();
  report.seed = seed;
  report.source_pre = score_source(adapter, data, spec.batch_size, seed);
  report.stages.push_back({"source-pre", -1, 0, true, report.source_pre});

  for (std::size_t e = 1; e <= epochs; ++e) {
    const Stream stream = stream_batches(data.targets, spec.batch_size, derive_seed({seed, e, kEpochTag}));
    std::map<int, std::pair<std::size_t, std::size_t>> tally;  // domain -> (correct, total)
    for (const auto& b : stream.batches) {
      const StepOutcome outcome = adapter.step(b.images);
      const std::size_t correct = count_correct(outcome.probs, b.labels);
      auto& t = tally[b.domain_id];
      t.first += correct;
      t.second += b.size();
      TelemetryRow row;
      row.epoch = e;
      row.domain_id = b.domain_id;
      row.batch_index = b.batch_index;
      row.mean_entropy = shannon_entropy(outcome.probs);
      row.batch_accuracy = percent(correct, b.size());
      row.skipped = outcome.error.has_value();
      report.telemetry.push_back(row);
    }

    std::vector<double> target_acc;
    for (const auto& d : data.targets) {
      const auto& t = tally[d.domain_id];
      target_acc.push_back(percent(t.first, t.second));
      report.stages.push_back({d.name, d.domain_id, e, false, target_acc.back()});
    }

    // The live adapter never sees source data; score a throwaway copy.
    const Adapter probe = adapter;
    EpochSummary summary;
    summary.epoch = e;
    summary.target_mean = mean_of(target_acc);
    summary.source_post = score_source(probe, data, spec.batch_size, seed);
    summary.forget_rate = report.source_pre - summary.source_post;
    report.stages.push_back({"source-post", -1, e, true, summary.source_post});
    report.epochs.push_back(summary);
  }

  std::vector<double> all;
  for (const auto& s : report.stages) all.push_back(s.accuracy);
  report.mean_accuracy = mean_of(all);
  report.forget_rate = report.epochs.back().forget_rate;
  report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

// Population mean and deviation, summed in sorted order so that the result
// does not depend on the order of the inputs.
std::pair<double, double> mean_std(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, values.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(values.size()))};
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

RunReport run_short_term(const ProtocolSpec& spec, const Model<float>& model,
                         const ProtocolData& data, std::uint64_t seed) {
  return run_protocol(spec, ProtocolKind::kShort, 1, model, data, seed);
}

RunReport run_long_term(const ProtocolSpec& spec, const Model<float>& model,
                        const ProtocolData& data, std::uint64_t seed) {
  return run_protocol(spec, ProtocolKind::kLong, spec.epochs, model, data, seed);
}

SweepReport run_batch_sweep(const ProtocolSpec& spec, const Model<float>& model,
                            const ProtocolData& data, std::uint64_t seed) {
  spec.validate();
  check_data(data);
  require(!spec.batch_sizes.empty(), ErrorCode::kInvalidArgument, "sweep needs batch sizes");
  std::vector<const Dataset*> domains;
  for (const auto& d : data.source_val) domains.push_back(&d);
  for (const auto& d : data.targets) domains.push_back(&d);
  std::size_t smallest = domains.front()->size();
  for (const auto* d : domains) smallest = std::min(smallest, d->size());
  require(spec.batch_sizes.back() <= smallest, ErrorCode::kInvalidArgument,
          "batch size " + std::to_string(spec.batch_sizes.back()) +
              " exceeds the smallest domain (" + std::to_string(smallest) + " samples)");

  AdapterConfig bn_config;
  bn_config.method = AdaptMethod::kBn;
  const Adapter bn = make_adapter(model, bn_config);

  // Frozen-statistics predictions do not depend on batching; compute once.
  std::vector<std::vector<int>> source_pred;
  for (const auto* d : domains) {
    std::vector<int> pred;
    for (std::size_t start = 0; start < d->size(); start += 256) {
      std::vector<std::size_t> idx;
      for (std::size_t i = start; i < std::min(d->size(), start + 256); ++i) idx.push_back(i);
      const auto eval = forward_eval(model, gather_images(*d, idx), StatMode::kFrozenSource);
      pred.insert(pred.end(), eval.predictions.begin(), eval.predictions.end());
    }
    source_pred.push_back(std::move(pred));
  }

  SweepReport report;
  report.seed = seed;
  for (const auto* d : domains) report.domain_ids.push_back(d->domain_id);
  for (std::size_t b : spec.batch_sizes) {
    SweepPoint point;
    point.batch_size = b;
    std::vector<double> src_acc;
    std::vector<double> bn_acc;
    for (std::size_t k = 0; k < domains.size(); ++k) {
      const Dataset& d = *domains[k];
      std::vector<std::size_t> order(d.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(derive_seed({seed, b, k, 0x5EE9}));
      rng.shuffle(order.begin(), order.end());
      std::size_t bn_correct = 0;
      std::size_t src_correct = 0;
      std::size_t total = 0;
      for (std::size_t start = 0; start + 2 <= order.size(); start += b) {
        const std::size_t n = std::min(b, order.size() - start);
        if (n < 2) break;
        const std::span<const std::size_t> pick(order.data() + start, n);
        const auto pred = argmax_rows(bn.infer(gather_images(d, pick)));
        for (std::size_t i = 0; i < n; ++i) {
          bn_correct += pred[i] == d.labels[pick[i]];
          src_correct += source_pred[k][pick[i]] == d.labels[pick[i]];
        }
        total += n;
      }
      src_acc.push_back(percent(src_correct, total));
      bn_acc.push_back(percent(bn_correct, total));
      point.domain_source.push_back(src_acc.back());
      point.domain_bn.push_back(bn_acc.back());
      point.domain_gain.push_back(bn_acc.back() - src_acc.back());
    }
    point.source_accuracy = mean_of(src_acc);
    point.bn_accuracy = mean_of(bn_acc);
    point.gain = mean_of(point.domain_gain);
    point.negative = point.gain < 0.0;
    report.points.push_back(std::move(point));
  }
  return report;
}

AggregateReport aggregate_seeds(std::span<const RunReport> reports) {
  require(!reports.empty(), ErrorCode::kInvalidArgument, "nothing to aggregate");
  const RunReport& first = reports.front();
  for (const auto& r : reports) {
    require(r.adapter == first.adapter, ErrorCode::kInvalidArgument,
            "cannot aggregate " + r.adapter + " with " + first.adapter);
    bool same = r.stages.size() == first.stages.size() && r.epochs.size() == first.epochs.size();
    for (std::size_t i = 0; same && i < r.stages.size(); ++i)
      same = r.stages[i].name == first.stages[i].name &&
             r.stages[i].domain_id == first.stages[i].domain_id &&
             r.stages[i].epoch == first.stages[i].epoch;
    require(same, ErrorCode::kShapeMismatch, "reports do not share the same stage list");
  }
  AggregateReport out;
  out.adapter = first.adapter;
  out.seed_count = reports.size();
  for (std::size_t i = 0; i < first.stages.size(); ++i) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(r.stages[i].accuracy);
    const auto [m, s] = mean_std(v);
    out.stages.push_back({first.stages[i].name, first.stages[i].domain_id, first.stages[i].epoch, m, s});
  }
  std::vector<double> means;
  std::vector<double> forgets;
  for (const auto& r : reports) {
    means.push_back(r.mean_accuracy);
    forgets.push_back(r.forget_rate);
  }
  std::tie(out.mean_accuracy, out.mean_accuracy_std) = mean_std(means);
  std::tie(out.forget_rate, out.forget_rate_std) = mean_std(forgets);
  for (std::size_t e = 0; e < first.epochs.size(); ++e) {
    std::vector<double> tm;
    std::vector<double> fr;
    for (const auto& r : reports) {
      tm.push_back(r.epochs[e].target_mean);
      fr.push_back(r.epochs[e].forget_rate);
    }
    out.epoch_target_mean.push_back(mean_std(tm).first);
    out.epoch_forget_rate.push_back(mean_std(fr).first);
  }
  return out;
}

SweepAggregate aggregate_sweeps(std::span<const SweepReport> reports) {
  require(!reports.empty(), ErrorCode::kInvalidArgument, "nothing to aggregate");
  SweepAggregate out;
  out.seed_count = reports.size();
  for (const auto& p : reports.front().points) out.batch_sizes.push_back(p.batch_size);
  for (const auto& r : reports) {
    bool same = r.points.size() == out.batch_sizes.size();
    for (std::size_t i = 0; same && i < r.points.size(); ++i)
      same = r.points[i].batch_size == out.batch_sizes[i];
    require(same, ErrorCode::kShapeMismatch, "sweeps do not share the same batch sizes");
  }
  for (std::size_t i = 0; i < out.batch_sizes.size(); ++i) {
    std::vector<double> g;
    for (const auto& r : reports) g.push_back(r.points[i].gain);
    const auto [m, s] = mean_std(g);
    out.gain_mean.push_back(m);
    out.gain_std.push_back(s);
  }
  return out;
}

void write_results_csv(std::ostream& out, std::string_view run_id,
                       std::span<const RunReport> reports, bool header) {
  if (header) out << "run_id,seed,adapter,stage_index,stage_name,accuracy,forget_rate,epoch\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.stages.size(); ++i) {
      const auto& s = r.stages[i];
      const double forget = s.epoch == 0 ? 0.0 : r.epochs.at(s.epoch - 1).forget_rate;
      out << csv_field(run_id) << ',' << r.seed << ',' << csv_field(r.adapter) << ',' << i << ','
          << csv_field(s.name) << ',' << fmt(s.accuracy) << ',' << fmt(forget) << ',' << s.epoch
          << '\n';
    }
    // Summary row: the mean over every stage above, both source stages included.
    out << csv_field(run_id) << ',' << r.seed << ',' << csv_field(r.adapter) << ','
        << r.stages.size() << ",mean," << fmt(r.mean_accuracy) << ',' << fmt(r.forget_rate) << ','
        << r.epochs.size() << '\n';
  }
}

void write_telemetry_csv(std::ostream& out, std::string_view run_id,
                         std::span<const RunReport> reports, bool header) {
  if (header) out << "run_id,epoch,domain_id,batch_index,mean_entropy,batch_accuracy\n";
  for (const auto& r : reports)
    for (const auto& t : r.telemetry)
      out << csv_field(run_id) << ',' << t.epoch << ',' << t.domain_id << ',' << t.batch_index
          << ',' << fmt(t.mean_entropy) << ',' << fmt(t.batch_accuracy) << '\n';
}

void write_aggregate_csv(std::ostream& out, std::span<const AggregateReport> aggregates) {
  out << "adapter,seed_count,stage_index,stage_name,domain_id,epoch,mean,std\n";
  for (const auto& a : aggregates) {
    for (std::size_t i = 0; i < a.stages.size(); ++i) {
      const auto& s = a.stages[i];
      out << csv_field(a.adapter) << ',' << a.seed_count << ',' << i << ',' << csv_field(s.name)
          << ',' << s.domain_id << ',' << s.epoch << ',' << fmt(s.mean) << ',' << fmt(s.stddev)
          << '\n';
    }
    out << csv_field(a.adapter) << ',' << a.seed_count << ',' << a.stages.size() << ",mean,-1,"
        << a.epoch_target_mean.size() << ',' << fmt(a.mean_accuracy) << ','
        << fmt(a.mean_accuracy_std) << '\n';
    out << csv_field(a.adapter) << ',' << a.seed_count << ',' << a.stages.size() + 1
        << ",forget_rate,-1," << a.epoch_target_mean.size() << ',' << fmt(a.forget_rate) << ','
        << fmt(a.forget_rate_std) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, std::string_view run_id,
                     std::span<const SweepReport> reports) {
  out << "run_id,seed,batch_size,domain_id,source_accuracy,bn_accuracy,gain,negative\n";
  for (const auto& r : reports) {
    for (const auto& p : r.points) {
      for (std::size_t k = 0; k < r.domain_ids.size(); ++k) {
        out << csv_field(run_id) << ',' << r.seed << ',' << p.batch_size << ',' << r.domain_ids[k]
            << ',' << fmt(p.domain_source[k]) << ',' << fmt(p.domain_bn[k]) << ','
            << fmt(p.domain_gain[k]) << ',' << (p.domain_gain[k] < 0.0 ? 1 : 0) << '\n';
      }
      out << csv_field(run_id) << ',' << r.seed << ',' << p.batch_size << ",all,"
          << fmt(p.source_accuracy) << ',' << fmt(p.bn_accuracy) << ',' << fmt(p.gain) << ','
          << (p.negative ? 1 : 0) << '\n';
    }
  }
}

}  // namespace cta
