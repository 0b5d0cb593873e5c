#include <benchmark/benchmark.h>

#include "csma/autoencoder.hpp"
#include "csma/dataset.hpp"
#include "csma/matrix.hpp"
#include "csma/metrics.hpp"
#include "csma/rng.hpp"

namespace {

using namespace csma;

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix a = rand_matrix(rng, n, n, 1.0);
  const Matrix b = rand_matrix(rng, n, n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(32, 256);

void BM_Encode(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  TrainConfig cfg;
  const LayerWeights w = init_layer(dim, dim, cfg, rng);
  const Matrix x = rand_matrix(rng, 256, dim, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(encode(w, x));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_Encode)->Arg(64)->Arg(256);

// One epoch of per-sample CSMA training on the synthetic task.
void BM_CsmaEpoch(benchmark::State& state) {
  SynthParams p;
  p.dim = static_cast<std::size_t>(state.range(0));
  p.n_per_class = 250;
  p.seed = 3;
  const LabeledDataset ds = synth_two_class(p);
  const Matrix minors = ds.rows_of(kMinor);
  const Matrix adults = ds.rows_of(kAdult);
  TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_single_layer(minors, adults, p.dim, cfg));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(ds.size()));
}
BENCHMARK(BM_CsmaEpoch)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_RocCurve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  std::vector<double> scores(n);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i % 2 ? kAdult : kMinor;
    scores[i] = rng.uniform() * 0.5 + 0.5 * labels[i];
  }
  for (auto _ : state) benchmark::DoNotOptimize(roc_auc(roc_curve(scores, labels)));
}
BENCHMARK(BM_RocCurve)->Arg(1000)->Arg(50000);

}  // namespace
BENCHMARK_MAIN();
