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

#include "runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "cta/checkpoint.hpp"
#include "cta/rng.hpp"
#include "cta/train.hpp"
#include "json.hpp"

namespace cta::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex_hash(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 12);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "short write to " + path.string());
}

class Logger {
 public:
  Logger(std::ostream& sink, bool verbose) : sink_(sink), verbose_(verbose) {}
  void operator()(const std::string& line) {
    if (!verbose_) return;
    std::lock_guard lock(mu_);
    sink_ << line << '\n' << std::flush;
  }

 private:
  std::ostream& sink_;
  bool verbose_;
  std::mutex mu_;
};

// Calls fn(i) for i in [0, n) on up to `workers` threads; results are
// written by index so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Dataset concat(const std::vector<Dataset>& parts) {
  Dataset out = parts.front();
  if (parts.size() == 1) return out;
  std::vector<float> pixels(out.images.values().begin(), out.images.values().end());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto& p = parts[i];
    pixels.insert(pixels.end(), p.images.values().begin(), p.images.values().end());
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  out.images = Tensor<float>({out.labels.size(), kImageChannels, kImageSize, kImageSize},
                             std::move(pixels));
  return out;
}

struct SeedPlan {
  std::uint64_t seed;
  std::uint64_t split_seed;
  std::uint64_t init_seed;
  std::uint64_t train_seed;
};

SeedPlan plan_for(const ExperimentConfig& cfg, std::uint64_t seed) {
  return {seed, derive_seed({cfg.master_seed, seed, 0x5B1}), derive_seed({cfg.master_seed, seed, 0x1417}),
          derive_seed({cfg.master_seed, seed, 0x7A1})};
}

struct SourceData {
  Dataset train;
  std::vector<Dataset> val;
};

SourceData source_data(const ExperimentConfig& cfg, const SeedPlan& plan) {
  std::vector<Dataset> train_parts;
  SourceData out;
  for (int id : cfg.protocol.source_ids) {
    const Dataset full = generate_domain(*find_domain(cfg, id), cfg.source_training.per_class);
    auto [train, val] = split_train_val(full, cfg.source_training.split_fraction, plan.split_seed);
    train_parts.push_back(std::move(train));
    out.val.push_back(std::move(val));
  }
  out.train = concat(train_parts);
  return out;
}

std::vector<Dataset> target_data(const ExperimentConfig& cfg) {
  std::vector<Dataset> out;
  for (int id : cfg.protocol.target_ids)
    out.push_back(generate_domain(*find_domain(cfg, id), cfg.target_per_class));
  return out;
}

fs::path checkpoint_relpath(const ExperimentConfig& cfg, std::uint64_t seed) {
  return fs::path("checkpoints") / training_hash(cfg) / ("seed-" + std::to_string(seed) + ".ctab");
}

// Latest run directory under output_dir holding the checkpoint for seed.
fs::path find_checkpoint(const fs::path& output_dir, const ExperimentConfig& cfg, std::uint64_t seed) {
  const fs::path rel = checkpoint_relpath(cfg, seed);
  std::vector<fs::path> hits;
  std::error_code ec;
  if (fs::is_directory(output_dir, ec)) {
    for (const auto& entry : fs::directory_iterator(output_dir, ec))
      if (entry.is_directory() && fs::exists(entry.path() / rel)) hits.push_back(entry.path() / rel);
  }
  if (hits.empty())
    fail(ErrorCode::kNotFound, "no source checkpoint for seed " + std::to_string(seed) +
                                   "; expected " + (output_dir / "<run_id>" / rel).string() +
                                   " (run train-source with this config first)");
  std::sort(hits.begin(), hits.end());
  return hits.back();
}

Model<float> load_source_model(const fs::path& output_dir, const ExperimentConfig& cfg,
                               std::uint64_t seed, std::vector<std::string>& used) {
  const fs::path path = find_checkpoint(output_dir, cfg, seed);
  Checkpoint ck = load_checkpoint(path);
  require(ck.model.spec == cfg.model, ErrorCode::kComposition,
          path.string() + ": checkpoint architecture does not match the config's model section");
  used.push_back(path.string());
  return std::move(ck.model);
}

struct Context {
  const RunOptions& options;
  ExperimentConfig config;
  fs::path output_dir;
  fs::path run_dir;
  std::string run_id;       // directory name
  std::string content_id;   // hash of subcommand + frozen config, used inside CSVs
  Logger& log;
  std::ostream& out;
};

std::string adapter_file_tag(const AdapterConfig& a, std::size_t index) {
  return std::to_string(index) + "-" + std::string(to_string(a.method));
}

void run_train_source(Context& ctx) {
  const auto& cfg = ctx.config;
  const auto& seeds = cfg.protocol.seeds;
  const fs::path dir = ctx.run_dir / checkpoint_relpath(cfg, seeds.front()).parent_path();
  fs::create_directories(dir);
  std::vector<TrainHistory> histories(seeds.size());
  parallel_for(seeds.size(), ctx.options.parallel_seeds, [&](std::size_t i) {
    const SeedPlan plan = plan_for(cfg, seeds[i]);
    const SourceData data = source_data(cfg, plan);
    Model<float> model = build_model<float>(cfg.model, plan.init_seed);
    TrainConfig tc;
    tc.epochs = cfg.source_training.epochs;
    tc.batch_size = cfg.source_training.batch_size;
    tc.optimizer = cfg.source_training.optimizer;
    tc.seed = plan.train_seed;
    histories[i] = train_source(model, data.train, concat(data.val), tc);
    save_checkpoint({model, {seeds[i], tc.epochs, histories[i].final_val_accuracy}},
                    ctx.run_dir / checkpoint_relpath(cfg, seeds[i]));
    ctx.log("seed " + std::to_string(seeds[i]) + ": source val accuracy " +
            std::to_string(histories[i].final_val_accuracy));
  });
  std::ostringstream csv;
  csv << "run_id,seed,epoch,train_loss,val_accuracy\n";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& h = histories[i];
    for (std::size_t e = 0; e < h.epoch_train_loss.size(); ++e) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f", h.epoch_train_loss[e], h.val_accuracy[e]);
      csv << ctx.content_id << ',' << seeds[i] << ',' << e + 1 << ',' << buf << '\n';
    }
    char acc[32];
    std::snprintf(acc, sizeof(acc), "%.2f", 100.0 * h.final_val_accuracy);
    ctx.out << "seed " << seeds[i] << ": source validation accuracy " << acc << "%\n";
  }
  write_file(ctx.run_dir / "training.csv", csv.str());
}

void run_adapt(Context& ctx, bool long_term) {
  const auto& cfg = ctx.config;
  const auto& seeds = cfg.protocol.seeds;
  std::vector<std::string> used;
  std::vector<Model<float>> models;
  for (auto s : seeds) models.push_back(load_source_model(ctx.output_dir, cfg, s, used));
  const std::vector<Dataset> targets = target_data(cfg);

  ProtocolSpec spec = cfg.protocol;
  spec.kind = long_term ? ProtocolKind::kLong : ProtocolKind::kShort;
  const std::size_t n_adapters = cfg.adapters.size();
  std::vector<std::vector<RunReport>> reports(n_adapters, std::vector<RunReport>(seeds.size()));
  parallel_for(seeds.size(), ctx.options.parallel_seeds, [&](std::size_t i) {
    ProtocolData data;
    data.source_val = source_data(cfg, plan_for(cfg, seeds[i])).val;
    data.targets = targets;
    for (std::size_t a = 0; a < n_adapters; ++a) {
      ProtocolSpec s = spec;
      s.adapter = cfg.adapters[a];
      reports[a][i] = long_term ? run_long_term(s, models[i], data, seeds[i])
                                : run_short_term(s, models[i], data, seeds[i]);
      ctx.log(cfg.adapters[a].label() + " seed " + std::to_string(seeds[i]) + ": mean " +
              std::to_string(reports[a][i].mean_accuracy) + ", forget " +
              std::to_string(reports[a][i].forget_rate));
    }
  });

  std::ostringstream results;
  std::vector<AggregateReport> aggregates;
  fs::create_directories(ctx.run_dir / "telemetry");
  for (std::size_t a = 0; a < n_adapters; ++a) {
    write_results_csv(results, ctx.content_id, reports[a], a == 0);
    aggregates.push_back(aggregate_seeds(reports[a]));
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      std::ostringstream tel;
      write_telemetry_csv(tel, ctx.content_id, std::span<const RunReport>(&reports[a][i], 1));
      write_file(ctx.run_dir / "telemetry" /
                     (adapter_file_tag(cfg.adapters[a], a) + "-seed-" + std::to_string(seeds[i]) + ".csv"),
                 tel.str());
    }
  }
  write_file(ctx.run_dir / "results.csv", results.str());
  std::ostringstream agg;
  write_aggregate_csv(agg, aggregates);
  write_file(ctx.run_dir / "aggregate.csv", agg.str());
  if (long_term) write_file(ctx.run_dir / "long_term.svg", render_long_term_svg(aggregates));
  write_file(ctx.run_dir / "checkpoints.txt", [&] {
    std::string s;
    for (const auto& u : used) s += u + "\n";
    return s;
  }());

  for (const auto& g : aggregates) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-8s mean %6.2f (+/- %.2f)  forget %6.2f (+/- %.2f)  [%zu seed(s)]\n",
                  g.adapter.c_str(), g.mean_accuracy, g.mean_accuracy_std, g.forget_rate,
                  g.forget_rate_std, g.seed_count);
    ctx.out << line;
  }
}

void run_sweep(Context& ctx) {
  const auto& cfg = ctx.config;
  const auto& seeds = cfg.protocol.seeds;
  std::vector<std::string> used;
  std::vector<Model<float>> models;
  for (auto s : seeds) models.push_back(load_source_model(ctx.output_dir, cfg, s, used));
  const std::vector<Dataset> targets = target_data(cfg);
  std::vector<SweepReport> reports(seeds.size());
  parallel_for(seeds.size(), ctx.options.parallel_seeds, [&](std::size_t i) {
    ProtocolData data;
    data.source_val = source_data(cfg, plan_for(cfg, seeds[i])).val;
    data.targets = targets;
    ProtocolSpec spec = cfg.protocol;
    spec.kind = ProtocolKind::kSweep;
    reports[i] = run_batch_sweep(spec, models[i], data, seeds[i]);
    ctx.log("sweep seed " + std::to_string(seeds[i]) + " done");
  });
  std::ostringstream csv;
  write_sweep_csv(csv, ctx.content_id, reports);
  write_file(ctx.run_dir / "sweep.csv", csv.str());
  const SweepAggregate agg = aggregate_sweeps(reports);
  write_file(ctx.run_dir / "sweep.svg", render_sweep_svg(agg));
  for (std::size_t i = 0; i < agg.batch_sizes.size(); ++i) {
    char line[96];
    std::snprintf(line, sizeof(line), "batch %4zu  BN gain %+6.2f (+/- %.2f)%s\n", agg.batch_sizes[i],
                  agg.gain_mean[i], agg.gain_std[i], agg.gain_mean[i] < 0 ? "  negative" : "");
    ctx.out << line;
  }
}

void run_inspect(Context& ctx) {
  const auto& cfg = ctx.config;
  const std::uint64_t seed = cfg.protocol.seeds.front();
  std::vector<std::string> used;
  const Model<float> model = load_source_model(ctx.output_dir, cfg, seed, used);
  const std::vector<Dataset> targets = target_data(cfg);
  const int domain = cfg.inspect.domain_id >= 0 ? cfg.inspect.domain_id : targets.front().domain_id;
  std::size_t position = targets.size();
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (targets[i].domain_id == domain) position = i;
  require(position < targets.size(), ErrorCode::kConfig,
          "inspect.domain_id " + std::to_string(domain) + " is not a target domain of the protocol");

  // Every adapter follows the target stream up to the first batch of the
  // inspected domain; the chart shows its predictions on that batch.
  const Stream stream = stream_batches(targets, cfg.protocol.batch_size, derive_seed({seed, 1, 0xE90C}));
  std::vector<ConfidenceSeries> series;
  const Batch* shown = nullptr;
  for (std::size_t a = 0; a < cfg.adapters.size(); ++a) {
    AdapterConfig ac = cfg.adapters[a];
    ac.seed = derive_seed({ac.seed, seed, 0xADA});
    Adapter adapter = make_adapter(model, ac);
    for (const auto& b : stream.batches) {
      StepOutcome outcome = adapter.step(b.images);
      if (b.domain_id == domain) {
        series.push_back({ac.label(), std::move(outcome.probs)});
        shown = &b;
        break;
      }
    }
  }
  require(shown != nullptr, ErrorCode::kConfig, "inspected domain produced no batch");
  std::vector<std::size_t> samples;
  for (std::size_t i = 0; i < std::min(cfg.inspect.samples, shown->size()); ++i) samples.push_back(i);
  export_confidence_chart(series, *shown, samples, ctx.run_dir / "confidence.svg",
                          ctx.run_dir / "confidence.csv");
  ctx.out << "confidence chart: " << series.size() << " adapter(s) x " << samples.size()
          << " sample(s) of domain " << domain << "\n";
}

void run_ingest_check(Context& ctx) {
  require(ctx.options.data_root.has_value(), ErrorCode::kConfig,
          "ingest-check needs --data <root>");
  const auto domains = ingest_folder(*ctx.options.data_root);
  std::ostringstream csv;
  csv << "domain_id,name,samples,classes\n";
  for (const auto& d : domains) {
    csv << d.domain_id << ',' << d.name << ',' << d.size() << ',' << d.num_classes << '\n';
    ctx.out << "domain " << d.domain_id << " (" << d.name << "): " << d.size() << " images, "
            << d.num_classes << " classes\n";
  }
  write_file(ctx.run_dir / "ingest.csv", csv.str());
}

std::string frozen_config(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  copy.output_dir.reset();
  return config_to_json(copy);
}

}  // namespace

ProtocolData protocol_data(const ExperimentConfig& config, std::uint64_t seed) {
  ProtocolData data;
  data.source_val = source_data(config, plan_for(config, seed)).val;
  data.targets = target_data(config);
  return data;
}

Model<float> find_source_model(const fs::path& output_dir, const ExperimentConfig& config,
                               std::uint64_t seed) {
  std::vector<std::string> used;
  return load_source_model(output_dir, config, seed, used);
}

fs::path resolve_output_dir(const RunOptions& options, const ExperimentConfig& config) {
  if (options.output_dir) return *options.output_dir;
  if (config.output_dir && !config.output_dir->empty()) return *config.output_dir;
  if (const char* env = std::getenv("CTA_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "runs";
}

std::string training_hash(const ExperimentConfig& config) {
  json doc = json::parse(config_to_json(config));
  json sources = json::array();
  for (int id : config.protocol.source_ids)
    for (const auto& d : doc["domains"])
      if (d["id"] == id) sources.push_back(d);
  const json key{{"master_seed", doc["master_seed"]},
                 {"model", doc["model"]},
                 {"source_training", doc["source_training"]},
                 {"sources", sources}};
  return hex_hash(key.dump());
}

RunResult execute_run(const RunOptions& options, std::ostream& out, std::ostream& log_stream) {
  RunResult result;
  Logger log(log_stream, options.verbose);
  try {
    const bool known = std::any_of(std::begin(kSubcommands), std::end(kSubcommands),
                                   [&](const char* s) { return options.subcommand == s; });
    require(known, ErrorCode::kConfig, "unknown subcommand '" + options.subcommand + "'");
    require(options.parallel_seeds >= 1, ErrorCode::kConfig, "--parallel-seeds must be at least 1");
    ExperimentConfig config;
    if (options.config_path) {
      config = parse_config(*options.config_path);
    } else {
      require(options.subcommand == "ingest-check", ErrorCode::kConfig,
              options.subcommand + " needs --config <path>");
      config = parse_config_text("{}");
    }
    if (options.seed) config.master_seed = *options.seed;

    const fs::path output_dir = resolve_output_dir(options, config);
    const std::string frozen = frozen_config(config);
    const std::string content_id = hex_hash(options.subcommand + "\n" + frozen);
    std::error_code ec;
    fs::create_directories(output_dir, ec);
    require(!ec && fs::is_directory(output_dir), ErrorCode::kIo,
            "cannot create output directory " + output_dir.string() +
                (ec ? ": " + ec.message() : std::string()));
    std::string run_id = utc_timestamp() + "-" + content_id;
    for (int n = 2; fs::exists(output_dir / run_id); ++n)
      run_id = utc_timestamp() + "-" + content_id + "-" + std::to_string(n);
    const fs::path run_dir = output_dir / run_id;
    fs::create_directories(run_dir, ec);
    require(!ec, ErrorCode::kIo, "cannot create " + run_dir.string() + ": " + ec.message());
    write_file(run_dir / "config.json", frozen);
    write_file(run_dir / "command.txt", options.subcommand + "\n");
    result.run_dir = run_dir;

    Context ctx{options, config, output_dir, run_dir, run_id, content_id, log, out};
    log(options.subcommand + ": run directory " + run_dir.string());
    if (options.subcommand == "train-source") run_train_source(ctx);
    else if (options.subcommand == "adapt-short") run_adapt(ctx, false);
    else if (options.subcommand == "adapt-long") run_adapt(ctx, true);
    else if (options.subcommand == "sweep") run_sweep(ctx);
    else if (options.subcommand == "inspect") run_inspect(ctx);
    else run_ingest_check(ctx);
    out << "run directory: " << run_dir.string() << "\n";
    result.exit_code = 0;
  } catch (const ConfigError& e) {
    result.exit_code = 2;
    result.message = e.what();
  } catch (const Error& e) {
    result.exit_code = e.code() == ErrorCode::kConfig ? 2 : 1;
    result.message = e.what();
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.message = e.what();
  }
  return result;
}

}  // namespace cta::cli
