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

#include <benchmark/benchmark.h>

#include "cta/adapt.hpp"
#include "cta/layers.hpp"
#include "cta/model.hpp"
#include "cta/rng.hpp"
#include "cta/shiftgen.hpp"

namespace {

using cta::Tensor;

Tensor<float> random_tensor(cta::Shape shape, std::uint64_t seed) {
  cta::Rng rng(seed);
  Tensor<float> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<float>(rng.normal());
  return t;
}

void BM_ConvForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({n, 16, 16, 16}, 1);
  const auto w = random_tensor({32, 16, 3, 3}, 2);
  const auto b = random_tensor({32}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(cta::conv2d_forward(x, w, b));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ConvForward)->Arg(32)->Arg(128);

void BM_ConvBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({n, 16, 16, 16}, 1);
  const auto w = random_tensor({32, 16, 3, 3}, 2);
  const auto dy = random_tensor({n, 32, 16, 16}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(cta::conv2d_backward(x, w, dy));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ConvBackward)->Arg(32)->Arg(128);

struct Fixture {
  cta::Model<float> model = cta::build_model<float>(cta::default_model_spec(), 7);
  cta::Dataset data = cta::generate_domain(cta::default_contextual_domains()[4], 13);  // 130 images
  Tensor<float> batch(std::size_t n) const {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return cta::gather_images(data, idx);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_NetworkForward(benchmark::State& state) {
  const auto& f = fixture();
  const auto x = f.batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(cta::forward_eval(f.model, x, cta::StatMode::kTestBatch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NetworkForward)->Arg(16)->Arg(128);

void BM_AdapterStep(benchmark::State& state) {
  const auto& f = fixture();
  const auto method = static_cast<cta::AdaptMethod>(state.range(0));
  cta::AdapterConfig config;
  config.method = method;
  config.learning_rate = 1e-3;
  cta::Adapter adapter = cta::make_adapter(f.model, config);
  const auto x = f.batch(128);
  for (auto _ : state) benchmark::DoNotOptimize(adapter.step(x));
  state.SetLabel(config.label());
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_AdapterStep)
    ->Arg(static_cast<int>(cta::AdaptMethod::kSource))
    ->Arg(static_cast<int>(cta::AdaptMethod::kBn))
    ->Arg(static_cast<int>(cta::AdaptMethod::kTent))
    ->Arg(static_cast<int>(cta::AdaptMethod::kCotta))
    ->Unit(benchmark::kMillisecond);

void BM_RenderSample(benchmark::State& state) {
  const auto domains = cta::default_semantic_domains();
  const auto& spec = domains[static_cast<std::size_t>(state.range(0))];
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(cta::render_sample(spec, i++));
  state.SetLabel(spec.name);
}
BENCHMARK(BM_RenderSample)->DenseRange(0, 3);

}  // namespace

BENCHMARK_MAIN();
