#include <benchmark/benchmark.h>

#include "scvad/detector.hpp"
#include "scvad/parallel.hpp"
#include "scvad/random.hpp"
#include "scvad/synthetic.hpp"
#include "scvad/tensor.hpp"
#include "scvad/trainer.hpp"
#include "scvad/transformer.hpp"

namespace {

scvad::Tensor2 random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  scvad::Rng rng(seed);
  scvad::Tensor2 t(rows, cols);
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

scvad::ModelConfig model(std::size_t feature_dim, std::size_t model_dim, std::size_t window) {
  scvad::ModelConfig c;
  c.feature_dim = feature_dim;
  c.model_dim = model_dim;
  c.heads = 2;
  c.layers = 2;
  c.window = window;
  c.seed = 1;
  return c;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  scvad::set_thread_count(static_cast<std::size_t>(state.range(1)));
  const auto a = random_tensor(n, n, 1), b = random_tensor(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(scvad::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
  scvad::set_thread_count(0);
}
BENCHMARK(BM_Matmul)->UseRealTime()->Args({32, 1})->Args({256, 1})->Args({256, 4});

void BM_PredictNext(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto params = scvad::ModelParams::initialize(model(d, 32, 5));
  const auto x = random_tensor(5, d, 3);
  for (auto _ : state) benchmark::DoNotOptimize(scvad::predict_next(x, params, scvad::SelfContext::kOn));
}
BENCHMARK(BM_PredictNext)->Arg(16)->Arg(528);

void BM_TrainEpoch(benchmark::State& state) {
  scvad::SynthConfig s;
  s.dim = 16;
  s.length = 40;
  const auto stream = scvad::generate_synthetic(s);
  scvad::TrainConfig t;
  t.n_shots = 30;
  t.window = 5;
  t.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(scvad::train_few_shot(stream, model(16, 32, 5), t));
}
BENCHMARK(BM_TrainEpoch);

void BM_Detect(benchmark::State& state) {
  scvad::SynthConfig s;
  s.dim = 16;
  s.length = 200;
  s.anomaly_spans = {{150, 160}};
  const auto stream = scvad::generate_synthetic(s);
  scvad::TrainConfig t;
  t.n_shots = 30;
  t.window = 5;
  t.epochs = 1;
  const auto artifact = scvad::train_few_shot(stream, model(16, 32, 5), t);
  for (auto _ : state) benchmark::DoNotOptimize(scvad::detect(artifact, stream, scvad::ConsistencyConfig{}));
  state.SetItemsProcessed(state.iterations() * 170);
}
BENCHMARK(BM_Detect);

}  // namespace
BENCHMARK_MAIN();
