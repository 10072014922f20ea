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

// Runs every acceptance criterion and prints one PASS/FAIL line per
// criterion, followed by "<passed>/<total> criteria passed".

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "cta/adapt.hpp"
#include "cta/batchnorm.hpp"
#include "cta/checkpoint.hpp"
#include "cta/harness.hpp"
#include "cta/numerics.hpp"
#include "cta/shiftgen.hpp"
#include "gradient_suite.hpp"
#include "runner.hpp"

namespace fs = std::filesystem;
using namespace cta;
using cta::cli::ExperimentConfig;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

void progress(const std::string& line) { std::cerr << "  .. " << line << std::endl; }

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Shared state: the trained source models and the two benchmarks.
struct Workspace {
  fs::path root;
  fs::path runs;
  fs::path config_path;
  ExperimentConfig contextual;
  ExperimentConfig semantic;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<Model<float>> models;
  std::vector<ProtocolData> ctx_data;
  std::vector<ProtocolData> sem_data;
  double train_seconds = 0.0;
  std::string train_error;
  fs::path train_dir;
};

const char* kContextualConfig = R"({
  "master_seed": 0,
  "domains": "contextual",
  "protocol": {"batch_size": 128, "seeds": [0, 1, 2]},
  "adapter": [{"method": "source"}, {"method": "bn"},
              {"method": "tent", "learning_rate": 0.001},
              {"method": "cotta", "learning_rate": 0.01}]
})";

const char* kSemanticConfig = R"({"master_seed": 0, "domains": "semantic",
  "protocol": {"batch_size": 128, "seeds": [0, 1, 2]}})";

Workspace& workspace() {
  static Workspace ws = [] {
    Workspace w;
    const char* env = std::getenv("CTA_ACCEPTANCE_DIR");
    w.root = env ? fs::path(env) : fs::temp_directory_path() / "cta_acceptance";
    fs::remove_all(w.root);
    fs::create_directories(w.root);
    w.runs = w.root / "runs";
    w.config_path = w.root / "contextual.json";
    std::ofstream(w.config_path) << kContextualConfig;
    w.contextual = cli::parse_config(w.config_path);
    w.semantic = cli::parse_config_text(kSemanticConfig);

    progress("training source models for seeds 0, 1, 2");
    const auto t0 = Clock::now();
    cli::RunOptions options;
    options.subcommand = "train-source";
    options.config_path = w.config_path;
    options.output_dir = w.runs;
    std::ostringstream out, log;
    const auto result = cli::execute_run(options, out, log);
    w.train_seconds = seconds_since(t0);
    w.train_dir = result.run_dir;
    if (result.exit_code != 0) {
      w.train_error = result.message;
      return w;
    }
    for (auto seed : w.seeds) {
      w.models.push_back(cli::find_source_model(w.runs, w.contextual, seed));
      w.ctx_data.push_back(cli::protocol_data(w.contextual, seed));
      w.sem_data.push_back(cli::protocol_data(w.semantic, seed));
    }
    progress(format("trained in %.1f s", w.train_seconds));
    return w;
  }();
  return ws;
}

AdapterConfig adapter(AdaptMethod method, double lr = 0.0) {
  AdapterConfig a;
  a.method = method;
  a.learning_rate = lr;
  return a;
}

// CoTTA as configured in the published runs: alpha 0.99, p 0.01, SGD.
AdapterConfig cotta_default() {
  AdapterConfig a = adapter(AdaptMethod::kCotta, 0.01);
  a.cotta_alpha = 0.99;
  a.restore_prob = 0.01;
  return a;
}

const std::vector<double> kTentGrid{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};

struct SeedRuns {
  std::vector<RunReport> reports;
  double target_mean() const {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(r.target_mean(0));
    return mean_of(v);
  }
  double forget() const {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(r.forget_rate);
    return mean_of(v);
  }
};

SeedRuns run_seeds(const ExperimentConfig& cfg, const std::vector<ProtocolData>& data,
                   const AdapterConfig& a, std::size_t epochs = 1) {
  Workspace& w = workspace();
  ProtocolSpec spec = cfg.protocol;
  spec.adapter = a;
  spec.epochs = epochs;
  SeedRuns out;
  for (std::size_t i = 0; i < w.seeds.size(); ++i) {
    spec.kind = epochs > 1 ? ProtocolKind::kLong : ProtocolKind::kShort;
    out.reports.push_back(epochs > 1 ? run_long_term(spec, w.models[i], data[i], w.seeds[i])
                                     : run_short_term(spec, w.models[i], data[i], w.seeds[i]));
  }
  return out;
}

// Short-term TENT tuning: the grid value with the best mean target
// accuracy over the seeds; ties go to the smaller learning rate.
struct Tuned {
  double lr = 0.0;
  SeedRuns runs;
  std::string table;
};

Tuned tune_tent(const ExperimentConfig& cfg, const std::vector<ProtocolData>& data) {
  Tuned best;
  double best_acc = -1.0;
  for (double lr : kTentGrid) {
    SeedRuns runs = run_seeds(cfg, data, adapter(AdaptMethod::kTent, lr));
    const double acc = runs.target_mean();
    best.table += format(" %g:%.2f", lr, acc);
    if (acc > best_acc) {
      best_acc = acc;
      best.lr = lr;
      best.runs = std::move(runs);
    }
  }
  return best;
}

Tuned& tuned(bool semantic) {
  static Tuned ctx, sem;
  static bool have_ctx = false, have_sem = false;
  Workspace& w = workspace();
  if (semantic && !have_sem) {
    progress("tuning TENT on the semantic benchmark");
    sem = tune_tent(w.semantic, w.sem_data);
    have_sem = true;
    progress("semantic TENT grid" + sem.table);
  }
  if (!semantic && !have_ctx) {
    progress("tuning TENT on the contextual benchmark");
    ctx = tune_tent(w.contextual, w.ctx_data);
    have_ctx = true;
    progress("contextual TENT grid" + ctx.table);
  }
  return semantic ? sem : ctx;
}

bool trained_ok(Outcome& out) {
  if (!workspace().train_error.empty()) {
    out.detail = "source training failed: " + workspace().train_error;
    return false;
  }
  return true;
}

// 1. Analytic gradients against central differences.
Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  const auto cases = testing::run_gradient_suite(130, 2026);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string worst_kind;
  for (const auto& c : cases)
    if (c.report.max_relative_error >= worst) {
      worst = c.report.max_relative_error;
      worst_kind = c.kind;
    }
  Outcome o;
  o.pass = cases.size() >= 100 && worst <= 1e-4 && secs < 60.0;
  o.detail = format("%zu instances over %zu kinds, max relative error %.2e (%s), %.2f s",
                    cases.size(), testing::gradient_case_kinds().size(), worst,
                    worst_kind.c_str(), secs);
  return o;
}

// 2. Reference values.
Outcome unit_values() {
  const double h4 = shannon_entropy(Tensor<double>({1, 4}, 0.25));
  const double h3 = shannon_entropy(Tensor<double>({1, 3}, {0.7, 0.2, 0.1}));
  const double ema = ema_update(Tensor<double>::from({1.0}), Tensor<double>::from({2.0}), 0.9)[0];
  auto state = BatchNormState<double>::identity(1);
  state.epsilon = 0.0;
  const auto bn = batchnorm_apply(Tensor<double>({3, 1}, {1.0, 2.0, 3.0}), state, StatMode::kTestBatch).y;
  Outcome o;
  o.pass = std::abs(h4 - std::log(4.0)) <= 1e-6 && std::abs(h3 - 0.801819) <= 1e-5 && ema == 1.1 &&
           std::abs(bn[0] + 1.224745) <= 1e-5 && std::abs(bn[1]) <= 1e-5 &&
           std::abs(bn[2] - 1.224745) <= 1e-5;
  o.detail = format("H(uniform4)=%.9f H(.7,.2,.1)=%.7f ema=%.17g bn=[%.6f, %.6f, %.6f]", h4, h3,
                    ema, bn[0], bn[1], bn[2]);
  return o;
}

// 3. Statelessness and isolation on the trained models.
Outcome statelessness() {
  Outcome o;
  if (!trained_ok(o)) return o;
  Workspace& w = workspace();
  std::vector<std::string> failures;

  // BN forget rate in every protocol.
  double worst_forget = 0.0;
  for (std::size_t i = 0; i < w.seeds.size(); ++i) {
    for (bool semantic : {false, true}) {
      ProtocolSpec spec = (semantic ? w.semantic : w.contextual).protocol;
      spec.adapter = adapter(AdaptMethod::kBn);
      spec.epochs = 3;
      const auto& data = semantic ? w.sem_data[i] : w.ctx_data[i];
      const RunReport s = run_short_term(spec, w.models[i], data, w.seeds[i]);
      const RunReport l = run_long_term(spec, w.models[i], data, w.seeds[i]);
      worst_forget = std::max({worst_forget, std::abs(s.forget_rate), std::abs(l.forget_rate)});
      for (const auto& e : l.epochs) worst_forget = std::max(worst_forget, std::abs(e.forget_rate));
    }
  }
  if (worst_forget != 0.0) failures.push_back(format("BN forget rate %.3f", worst_forget));

  const Model<float>& model = w.models.front();
  const Stream stream = stream_batches(w.sem_data[0].targets, 128, 11);
  const Tensor<float>& probe = stream.batches.front().images;

  // BN output independent of history.
  Adapter bn = make_adapter(model, adapter(AdaptMethod::kBn));
  const Tensor<float> first = bn.step(probe).probs;
  for (std::size_t b = 1; b < stream.batches.size(); b += 3) bn.step(stream.batches[b].images);
  if (!bit_identical(bn.step(probe).probs, first)) failures.push_back("BN output depends on history");

  // TENT parameter isolation over every batch of the stream (>= 100 steps).
  Adapter tent = make_adapter(model, adapter(AdaptMethod::kTent, 1e-2));
  std::size_t steps = 0;
  while (steps < 100)
    for (const auto& b : stream.batches) {
      tent.step(b.images);
      ++steps;
    }
  if (!bit_identical(tent.student(), tent.snapshot(),
                     {ParamRole::kWeight, ParamRole::kBias, ParamRole::kBnStat}))
    failures.push_back("TENT changed a non-affine parameter");

  // CoTTA with p = 1 and with alpha = 1, p = 0.
  AdapterConfig full = cotta_default();
  full.learning_rate = 0.05;
  full.restore_prob = 1.0;
  Adapter restore = make_adapter(model, full);
  AdapterConfig frozen = cotta_default();
  frozen.learning_rate = 0.05;
  frozen.cotta_alpha = 1.0;
  frozen.restore_prob = 0.0;
  Adapter teacher = make_adapter(model, frozen);
  Adapter reference = make_adapter(model, adapter(AdaptMethod::kBn));
  bool restored = true, matches = true;
  for (const auto& b : stream.batches) {
    restore.step(b.images);
    restored = restored && bit_identical(restore.student(), restore.snapshot());
    matches = matches && bit_identical(teacher.step(b.images).probs, reference.step(b.images).probs);
  }
  if (!restored) failures.push_back("CoTTA p=1 left the student off the snapshot");
  if (!matches) failures.push_back("CoTTA alpha=1 p=0 differs from BN");

  o.pass = failures.empty();
  o.detail = format("BN forget max |%.3f| over short+long x 2 benchmarks x 3 seeds; TENT %zu steps; "
                    "CoTTA checks on %zu batches",
                    worst_forget, steps, stream.batches.size());
  for (const auto& f : failures) o.detail += "; " + f;
  return o;
}

// 4. BN gains more under contextual shift; TENT/CoTTA forget more under
// semantic shift.
Outcome shift_magnitude() {
  Outcome o;
  if (!trained_ok(o)) return o;
  Workspace& w = workspace();
  const auto t0 = Clock::now();
  const SeedRuns ctx_src = run_seeds(w.contextual, w.ctx_data, adapter(AdaptMethod::kSource));
  const SeedRuns ctx_bn = run_seeds(w.contextual, w.ctx_data, adapter(AdaptMethod::kBn));
  const SeedRuns sem_src = run_seeds(w.semantic, w.sem_data, adapter(AdaptMethod::kSource));
  const SeedRuns sem_bn = run_seeds(w.semantic, w.sem_data, adapter(AdaptMethod::kBn));
  const Tuned& ctx_tent = tuned(false);
  const Tuned& sem_tent = tuned(true);
  const SeedRuns ctx_cotta = run_seeds(w.contextual, w.ctx_data, cotta_default());
  const SeedRuns sem_cotta = run_seeds(w.semantic, w.sem_data, cotta_default());
  const double ctx_gain = ctx_bn.target_mean() - ctx_src.target_mean();
  const double sem_gain = sem_bn.target_mean() - sem_src.target_mean();
  const bool gain_ok = ctx_gain > sem_gain;
  const bool tent_ok = sem_tent.runs.forget() > ctx_tent.runs.forget();
  const bool cotta_ok = sem_cotta.forget() > ctx_cotta.forget();
  o.pass = gain_ok && tent_ok && cotta_ok && seconds_since(t0) + w.train_seconds < 900.0;
  o.detail = format("BN gain ctx %.2f vs sem %.2f; forget TENT ctx %.2f (lr %g) vs sem %.2f (lr %g); "
                    "forget CoTTA ctx %.2f vs sem %.2f; %.0f s",
                    ctx_gain, sem_gain, ctx_tent.runs.forget(), ctx_tent.lr, sem_tent.runs.forget(),
                    sem_tent.lr, ctx_cotta.forget(), sem_cotta.forget(), seconds_since(t0));
  return o;
}

// 5. Short term TENT >= CoTTA; long term CoTTA ends above TENT and TENT
// has a declining tail.
Outcome short_vs_long() {
  Outcome o;
  if (!trained_ok(o)) return o;
  Workspace& w = workspace();
  const auto t0 = Clock::now();
  const Tuned& tent = tuned(true);
  const SeedRuns cotta_short = run_seeds(w.semantic, w.sem_data, cotta_default());
  constexpr std::size_t kEpochs = 10;
  progress(format("long-term TENT (lr %g) and CoTTA, %zu epochs", tent.lr, kEpochs));
  const SeedRuns tent_long = run_seeds(w.semantic, w.sem_data, adapter(AdaptMethod::kTent, tent.lr), kEpochs);
  const SeedRuns cotta_long = run_seeds(w.semantic, w.sem_data, cotta_default(), kEpochs);
  const AggregateReport tent_agg = aggregate_seeds(tent_long.reports);
  const AggregateReport cotta_agg = aggregate_seeds(cotta_long.reports);
  const auto& tc = tent_agg.epoch_target_mean;
  const auto& cc = cotta_agg.epoch_target_mean;

  const bool short_ok = tent.runs.target_mean() >= cotta_short.target_mean();
  const bool final_ok = cc.back() > tc.back();
  const double peak = *std::max_element(tc.begin(), tc.end());
  const bool tail_ok = tc.back() < peak && tc.back() < tc[tc.size() - 4];
  o.pass = short_ok && final_ok && tail_ok && seconds_since(t0) < 1800.0;
  std::string tent_curve, cotta_curve;
  for (std::size_t e = 0; e < tc.size(); ++e) {
    tent_curve += format("%s%.2f", e ? " " : "", tc[e]);
    cotta_curve += format("%s%.2f", e ? " " : "", cc[e]);
  }
  o.detail = format("short TENT %.2f (lr %g) vs CoTTA %.2f; final CoTTA %.2f vs TENT %.2f; "
                    "TENT peak %.2f; %.0f s",
                    tent.runs.target_mean(), tent.lr, cotta_short.target_mean(), cc.back(),
                    tc.back(), peak, seconds_since(t0));
  o.detail += "\n         TENT  per epoch: " + tent_curve + "\n         CoTTA per epoch: " + cotta_curve;
  return o;
}

// 6. BN gain grows with batch size, with diminishing increments.
Outcome batch_sweep() {
  Outcome o;
  if (!trained_ok(o)) return o;
  Workspace& w = workspace();
  std::vector<SweepReport> reports;
  ProtocolSpec spec = w.contextual.protocol;
  spec.kind = ProtocolKind::kSweep;
  spec.batch_sizes = {2, 4, 8, 16, 32, 64, 128, 256};
  for (std::size_t i = 0; i < w.seeds.size(); ++i)
    reports.push_back(run_batch_sweep(spec, w.models[i], w.ctx_data[i], w.seeds[i]));
  const SweepAggregate agg = aggregate_sweeps(reports);
  const auto& g = agg.gain_mean;
  bool monotone = true;
  for (std::size_t i = 1; i < g.size(); ++i) monotone = monotone && g[i] >= g[i - 1] - 1.0;
  const double first_two = g[2] - g[0];
  const double last_two = g[g.size() - 1] - g[g.size() - 3];
  o.pass = monotone && last_two < first_two;
  std::string curve;
  for (std::size_t i = 0; i < g.size(); ++i)
    curve += format("%s%zu:%+.2f", i ? " " : "", agg.batch_sizes[i], g[i]);
  o.detail = format("gain %s; first increments %.2f, last increments %.2f; batch 2 gain %+.2f%s",
                    curve.c_str(), first_two, last_two, g[0], g[0] < 0 ? " (negative)" : "");
  return o;
}

// 7. Byte-identical reruns and bit-exact checkpoints.
Outcome reproducibility() {
  Outcome o;
  if (!trained_ok(o)) return o;
  Workspace& w = workspace();
  const fs::path cfg = w.root / "repro.json";
  std::ofstream(cfg) << R"({"master_seed": 0, "domains": "contextual",
    "protocol": {"target_ids": [2, 6, 9], "batch_size": 128, "epochs": 2, "seeds": [0, 1, 2]},
    "adapter": [{"method": "source"}, {"method": "bn"},
                {"method": "tent", "learning_rate": 0.003},
                {"method": "cotta", "learning_rate": 0.01}]})";
  auto run = [&](const fs::path& config, const std::string& sub) {
    cli::RunOptions options;
    options.subcommand = sub;
    options.config_path = config;
    options.output_dir = w.runs;
    std::ostringstream out, log;
    return cli::execute_run(options, out, log);
  };
  std::vector<std::string> failures;
  const auto a = run(cfg, "adapt-long");
  const auto b = run(cfg, "adapt-long");
  if (a.exit_code != 0 || b.exit_code != 0) {
    o.detail = "adapt-long failed: " + a.message + b.message;
    return o;
  }
  const auto c = run(a.run_dir / "config.json", "adapt-long");
  for (const char* file : {"results.csv", "aggregate.csv"}) {
    const std::string ref = slurp(a.run_dir / file);
    if (ref.empty() || ref != slurp(b.run_dir / file) || ref != slurp(c.run_dir / file))
      failures.push_back(std::string(file) + " differs");
  }
  std::size_t checked = 0;
  for (const auto& entry : fs::recursive_directory_iterator(w.train_dir)) {
    if (entry.path().extension() != ".ctab") continue;
    const std::string bytes = slurp(entry.path());
    const Checkpoint ck = load_checkpoint(entry.path());
    const fs::path copy = w.root / "copy.ctab";
    save_checkpoint(ck, copy);
    const Checkpoint back = load_checkpoint(copy);
    if (slurp(copy) != bytes || !bit_identical(back.model.params, ck.model.params))
      failures.push_back("checkpoint " + entry.path().filename().string() + " does not round-trip");
    ++checked;
  }
  if (checked != w.seeds.size()) failures.push_back("expected one checkpoint per seed");
  o.pass = failures.empty();
  o.detail = format("3 adapt-long runs (two fresh, one from the frozen config) compared; %zu checkpoints "
                    "round-tripped", checked);
  for (const auto& f : failures) o.detail += "; " + f;
  return o;
}

// 8. The default model trains to >= 95% source-validation accuracy.
Outcome trainability() {
  Outcome o;
  if (!trained_ok(o)) return o;
  Workspace& w = workspace();
  std::ifstream in(w.train_dir / "training.csv");
  std::string line;
  std::getline(in, line);
  std::vector<int> first_epoch(w.seeds.size(), -1);
  std::vector<double> final_acc(w.seeds.size(), 0.0);
  std::size_t max_epoch = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string run_id, seed, epoch, loss, acc;
    std::getline(ss, run_id, ',');
    std::getline(ss, seed, ',');
    std::getline(ss, epoch, ',');
    std::getline(ss, loss, ',');
    std::getline(ss, acc, ',');
    const auto k = std::stoul(seed);
    const int e = std::stoi(epoch);
    max_epoch = std::max<std::size_t>(max_epoch, e);
    if (std::stod(acc) >= 0.95 && first_epoch[k] < 0) first_epoch[k] = e;
    final_acc[k] = std::stod(acc);
  }
  const double per_seed = w.train_seconds / static_cast<double>(w.seeds.size());
  bool ok = max_epoch <= 20 && per_seed < 300.0;
  std::string detail;
  for (std::size_t k = 0; k < w.seeds.size(); ++k) {
    ok = ok && first_epoch[k] > 0 && final_acc[k] >= 0.95;
    detail += format("seed %zu: %.2f%% (>=95%% at epoch %d); ", k, 100.0 * final_acc[k], first_epoch[k]);
  }
  o.pass = ok;
  o.detail = detail + format("%zu epochs, %.1f s per seed", max_epoch, per_seed);
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "gradient oracle", gradient_oracle},
      {2, "unit values", unit_values},
      {8, "source trainability", trainability},
      {3, "statelessness and isolation", statelessness},
      {4, "shift magnitude", shift_magnitude},
      {5, "short vs long term", short_vs_long},
      {6, "batch-size sweep", batch_sweep},
      {7, "reproducibility", reproducibility},
  };
  std::vector<std::pair<int, std::string>> lines;
  int passed = 0;
  for (const auto& c : criteria) {
    std::cerr << "criterion " << c.id << ": " << c.name << std::endl;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    passed += out.pass ? 1 : 0;
    const std::string line = format("%s  criterion %d  %-28s", out.pass ? "PASS" : "FAIL", c.id,
                                    c.name.c_str()) +
                             out.detail;
    std::cout << line << format("  [%.1f s]", seconds_since(t0)) << std::endl;
    lines.emplace_back(c.id, line);
  }
  std::cout << "\nsummary\n";
  std::sort(lines.begin(), lines.end());
  for (const auto& [id, line] : lines) std::cout << line.substr(0, line.find('\n')) << "\n";
  std::cout << passed << "/" << criteria.size() << " criteria passed" << std::endl;
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
