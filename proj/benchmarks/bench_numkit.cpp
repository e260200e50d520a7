#include <benchmark/benchmark.h>

#include "extractkit/numkit.hpp"
#include "extractkit/rng.hpp"

using namespace extractkit;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  RngStream rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void BM_Dense(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Matrix w = random_matrix(n, n, 1);
  const Vector b = random_matrix(n, 1, 2);
  const Vector x = random_matrix(n, 1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(dense(x, w, b));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Dense)->Arg(64)->Arg(256)->Arg(512);

void BM_RobustScaler(benchmark::State& state) {
  const Matrix x = random_matrix(state.range(0), 64, 4);
  for (auto _ : state) {
    auto p = fit_robust_scaler(x);
    benchmark::DoNotOptimize(apply_robust_scaler(p, x));
  }
}
BENCHMARK(BM_RobustScaler)->Arg(1000)->Arg(10000);

}  // namespace
