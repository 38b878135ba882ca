// Copyright 2026 The jacnet Authors.
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

// Serial reference vs OpenMP kernel for one learning step's deltas.
// Arg 0 is the hidden width; the 24-wide network is the default one.

#include <benchmark/benchmark.h>

#include "jacnet/learning.hpp"

using namespace jacnet;

namespace {

struct Setup {
  JacNet net;
  ObserverBank bank;
  LearningInput in;
  LearnParams params;

  explicit Setup(int width) {
    const NetConfig cfg{{3, width, width, width, 3}, Activation::Sigmoid, 3};
    net = init_weights(cfg, 1, 1.0);
    params = LearnParams::uniform(cfg, 1.0, 1.0, 0.01);
    ControllerConfig c = ControllerConfig::standard(3);
    const Vec x{{0.3, -0.2, 0.1}};
    bank = ObserverBank::start_at(x, cfg.estimated_systems(), c, 10.0);
    for (Observer& o : bank.systems) o.x_hat += Vec::Constant(3, 0.01);
    in = LearningInput{Vec{{0.4, -0.9, 1.3}}, Vec{{0.7, -0.3, 0.5}}, x,
                       Vec{{0.02, -0.05, 0.04}}};
  }
};

void BM_DeltasSerial(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto d = learning_deltas_serial(s.net, s.bank, s.in, 0.002, s.params, Mode::Region);
    benchmark::DoNotOptimize(d);
  }
}

void BM_DeltasOpenMP(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto d = learning_deltas_parallel(s.net, s.bank, s.in, 0.002, s.params, Mode::Region);
    benchmark::DoNotOptimize(d);
  }
}

}  // namespace

BENCHMARK(BM_DeltasSerial)->Arg(24)->Arg(96)->Arg(256);
BENCHMARK(BM_DeltasOpenMP)->Arg(24)->Arg(96)->Arg(256);

BENCHMARK_MAIN();
