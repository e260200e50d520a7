#include <benchmark/benchmark.h>

#include "extractkit/metrics.hpp"
#include "extractkit/rng.hpp"

using namespace extractkit;

namespace {

struct Scored {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

Scored random_scored(std::size_t n) {
  RngStream rng(11);
  Scored s;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::uint8_t>(rng.below(2));
    s.labels.push_back(y);
    s.scores.push_back(0.5 * rng.uniform() + 0.5 * y * rng.uniform());
  }
  return s;
}

void BM_RocCurve(benchmark::State& state) {
  const auto s = random_scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(roc_curve(s.scores, s.labels));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RocCurve)->Arg(2000)->Arg(100000);

void BM_ThresholdForFpr(benchmark::State& state) {
  const auto s = random_scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(threshold_for_fpr(s.scores, s.labels, 0.01));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ThresholdForFpr)->Arg(2000)->Arg(100000);

}  // namespace
