#include <benchmark/benchmark.h>

#include "extractkit/network.hpp"
#include "extractkit/rng.hpp"

using namespace extractkit;

namespace {

struct Net {
  NetworkShape shape;
  ParamSet params;
  Matrix x;
  Vector y;
};

Net make_net(Eigen::Index batch, bool dual) {
  Net n;
  n.shape.feature_width = 64;
  n.shape.hidden = {512, 256, 128, 64};
  n.shape.label_skip = dual;
  n.shape.dropout_rate = 0.3;
  n.params = init_params(n.shape, 7);
  RngStream rng(8);
  n.x.resize(batch, 64);
  for (Eigen::Index i = 0; i < n.x.size(); ++i) n.x.data()[i] = rng.normal();
  n.y.resize(batch);
  for (Eigen::Index i = 0; i < batch; ++i) n.y(i) = double(rng.below(2));
  return n;
}

void BM_Forward(benchmark::State& state) {
  const Net n = make_net(state.range(0), state.range(1) != 0);
  const Vector* labels = n.shape.label_skip ? &n.y : nullptr;
  for (auto _ : state) benchmark::DoNotOptimize(predict_scores(n.params, n.shape, n.x, labels));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Args({256, 0})->Args({256, 1})->Args({4096, 1});

void BM_Backprop(benchmark::State& state) {
  const Net n = make_net(state.range(0), state.range(1) != 0);
  const Vector* labels = n.shape.label_skip ? &n.y : nullptr;
  RngStream rng(9);
  for (auto _ : state) {
    const auto trace = forward_trace(n.params, n.shape, n.x, labels, &rng);
    benchmark::DoNotOptimize(backprop(n.params, n.shape, trace, n.y));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Backprop)->Args({256, 0})->Args({256, 1});

}  // namespace
