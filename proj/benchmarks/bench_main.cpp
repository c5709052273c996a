/*
 * Copyright 2026 The bvc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include "bvc/layers.hpp"
#include "bvc/model.hpp"
#include "bvc/ops.hpp"
#include "bvc/variational.hpp"

namespace {

using namespace bvc;

Tensor random(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform() - 0.5;
  return t;
}

void BM_MatmulForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random({n, n}, rng), b = random({n, n}, rng);
  for (auto _ : state) {
    Tape tape;
    Var x = tape.parameter("a", a);
    Var y = tape.parameter("b", b);
    benchmark::DoNotOptimize(tape.backward(sum(matmul(x, y))));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(2 * n * n * n));
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(32)->Arg(64)->Arg(128);

void BM_LstmStep(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0)), in = 60, h = 32;
  Rng rng(2);
  const Tensor x = random({batch, in}, rng), w = random({in, 4 * h}, rng), u = random({h, 4 * h}, rng),
               b = random({4 * h}, rng);
  for (auto _ : state) {
    Tape tape;
    const LstmVars p{tape.constant(w), tape.constant(u), tape.constant(b)};
    benchmark::DoNotOptimize(lstm_cell_step(tape.constant(x), lstm_zero_state(tape, batch, h), p).h.value());
  }
}
BENCHMARK(BM_LstmStep)->Arg(1)->Arg(64);

void BM_FlipoutForward(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0)), in = 64, out = 32;
  Rng rng(3);
  const Tensor x = random({batch, in}, rng), mu = random({in, out}, rng), bmu = random({out}, rng);
  const Tensor rho = Tensor::filled({in, out}, -3.0), brho = Tensor::filled({out}, -3.0);
  for (auto _ : state) {
    Tape tape;
    const VariationalDenseVars layer{tape.constant(mu), tape.constant(rho), tape.constant(bmu), tape.constant(brho)};
    benchmark::DoNotOptimize(flipout_forward(tape.constant(x), layer, rng).value());
  }
}
BENCHMARK(BM_FlipoutForward)->Arg(1)->Arg(64);

void BM_ModelForward(benchmark::State& state) {
  ModelSpec spec;
  spec.head = HeadKind::variational_flipout;
  const auto batch = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  const Model m = Model::initialize(spec, rng);
  std::vector<Tensor> xs;
  for (std::size_t i = 0; i < batch; ++i) xs.push_back(random({spec.depth, spec.features()}, rng));
  const Tensor input = stack_sequences(xs);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(
        model_forward(spec, m.bind_constants(tape), tape.constant(input), batch, ForwardOptions{}).value());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(batch));
}
BENCHMARK(BM_ModelForward)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
