#include <benchmark/benchmark.h>

#include <numeric>

#include "extractkit/kmedoids.hpp"
#include "extractkit/sampling.hpp"

using namespace extractkit;

namespace {

Matrix random_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  RngStream rng(seed);
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

PredictionBatch random_batch(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  PredictionBatch b;
  b.indices.resize(n);
  std::iota(b.indices.begin(), b.indices.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) b.scores.push_back(rng.uniform());
  return b;
}

void BM_KMedoids(benchmark::State& state) {
  const Matrix pts = random_points(state.range(0), 64, 1);
  const auto k = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    RngStream rng(2);
    benchmark::DoNotOptimize(kmedoids(pts, k, rng));
  }
}
BENCHMARK(BM_KMedoids)->Args({500, 50})->Args({2000, 350})->Unit(benchmark::kMillisecond);

void BM_SelectEntropy(benchmark::State& state) {
  const auto b = random_batch(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(select_entropy(b, 1750));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SelectEntropy)->Arg(10000)->Arg(100000);

void BM_SelectEntropyKMedoids(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto b = random_batch(n, 4);
  const Matrix f = random_points(static_cast<Eigen::Index>(n), 64, 5);
  for (auto _ : state) {
    RngStream rng(6);
    benchmark::DoNotOptimize(select_entropy_kmedoids(b, f, 100, 1000, rng));
  }
}
BENCHMARK(BM_SelectEntropyKMedoids)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace
