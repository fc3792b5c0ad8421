/*
 * Copyright 2026 The usbf Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "usbf/experiment.hpp"

namespace {

using namespace usbf;

const ExperimentConfig& desk() {
  static const ExperimentConfig cfg = ExperimentConfig::desk();
  return cfg;
}

Technique technique_arg(const benchmark::State& state) { return static_cast<Technique>(state.range(0)); }

void BM_Simulate(benchmark::State& state) {
  const auto& cfg = desk();
  const Scene s = cyst_scene(cfg);
  const auto array = cfg.small_array();
  for (auto _ : state) {
    auto a = acquire(technique_arg(state), s.phantom, array, array, cfg.pulse(), cfg.acquisition(), s.grid.angles);
    benchmark::DoNotOptimize(a);
  }
  state.SetLabel(std::string(to_string(technique_arg(state))) + ", " + std::to_string(s.phantom.size()) +
                 " scatterers");
}
BENCHMARK(BM_Simulate)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_Das(benchmark::State& state) {
  const auto& cfg = desk();
  const Scene s = cyst_scene(cfg);
  const auto array = cfg.small_array();
  const Acquisition a =
      acquire(technique_arg(state), s.phantom, array, array, cfg.pulse(), cfg.acquisition(), s.grid.angles);
  for (auto _ : state) benchmark::DoNotOptimize(das_image(a, s.grid, {cfg.interp}));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.grid.n_lines() * s.grid.depths.size()));
}
BENCHMARK(BM_Das)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto& cfg = desk();
  const auto setup = cfg.emulation_setup(Technique::SA);
  Network net = init_network(setup.shape(), 3, cfg.network());
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  std::mt19937 rng(5);
  std::normal_distribution<float> g;
  std::vector<float> in(batch * net.input_size), tgt(batch * net.output_size());
  for (float& v : in) v = g(rng);
  for (float& v : tgt) v = g(rng);
  TrainState ts = TrainState::fresh(net.params.size(), cfg.learning_rate, cfg.decay);
  for (auto _ : state) {
    const auto lg = loss_and_grads<float>(net, in, tgt, batch);
    adam_step<float>(net.params, lg.grads, ts);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(batch));
}
BENCHMARK(BM_TrainStep)->Arg(64)->Unit(benchmark::kMillisecond);

// Centre-column inference against the full output patch on a point scene.
void BM_DnnbImage(benchmark::State& state) {
  const auto& cfg = desk();
  const Scene s = points_scene(cfg);
  const auto array = cfg.small_array();
  const Acquisition a = acquire(Technique::SA, s.phantom, array, array, cfg.pulse(), cfg.acquisition(), s.grid.angles);
  const Network net = init_network(cfg.emulation_setup(Technique::SA).shape(), 3, cfg.network());
  const NetworkEmulator emu(net, Technique::SA, state.range(0) != 0);
  const ChannelSource src = a.source();
  for (auto _ : state) benchmark::DoNotOptimize(dnnb_reconstruct(src, emu, s.grid, {}));
  state.SetLabel(state.range(0) ? "full forward" : "centre only");
}
BENCHMARK(BM_DnnbImage)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
