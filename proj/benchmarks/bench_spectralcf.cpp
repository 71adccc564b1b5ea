#include <benchmark/benchmark.h>

#include <vector>

#include "spectralcf/evaluation.hpp"
#include "spectralcf/graph.hpp"
#include "spectralcf/model.hpp"
#include "spectralcf/synthetic.hpp"
#include "spectralcf/training.hpp"

namespace {

using namespace spectralcf;

// Square planted dataset with `n` users and `n` items.
InteractionSet dataset(Index n) { return two_community_dataset(n, n, 0.15, 0.02, 7).data; }

void BM_Eigendecompose(benchmark::State& state) {
  const auto graph = build_graph(dataset(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eigendecompose(graph));
  state.SetComplexityN(graph.n_vertices());
}
BENCHMARK(BM_Eigendecompose)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond)->Complexity();

void BM_ClosedFormKernel(benchmark::State& state) {
  const auto graph = build_graph(dataset(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(closed_form_kernel(graph));
}
BENCHMARK(BM_ClosedFormKernel)->RangeMultiplier(4)->Range(64, 1024)->Unit(benchmark::kMicrosecond);

void BM_DenseKernel(benchmark::State& state) {
  const auto graph = build_graph(dataset(state.range(0)));
  const auto basis = eigendecompose(graph);
  for (auto _ : state) benchmark::DoNotOptimize(conv_kernel(graph, basis, KernelForm::dense_eig));
}
BENCHMARK(BM_DenseKernel)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const auto train = dataset(state.range(0));
  const auto kernel = closed_form_kernel(build_graph(train));
  const ModelConfig config;
  const auto params = init_params(config, train.n_users(), train.n_items());
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, kernel, config));
}
BENCHMARK(BM_Forward)->RangeMultiplier(4)->Range(64, 1024)->Unit(benchmark::kMicrosecond);

void BM_TrainEpoch(benchmark::State& state) {
  const auto train_set = dataset(state.range(0));
  const auto kernel = closed_form_kernel(build_graph(train_set));
  const ModelConfig config;
  TrainConfig tc;
  tc.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(train_set, kernel, config, tc));
}
BENCHMARK(BM_TrainEpoch)->RangeMultiplier(4)->Range(64, 1024)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  const auto split = split_standard(dataset(state.range(0)), 0.8, 3);
  const auto kernel = closed_form_kernel(build_graph(split.train));
  const ModelConfig config;
  const auto params = init_params(config, split.train.n_users(), split.train.n_items());
  const auto factors = forward(params, kernel, config).factors;
  const std::vector<Index> cutoffs{20, 40, 60, 80, 100};
  const auto scorer = factor_scorer(factors);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(scorer, split, cutoffs));
}
BENCHMARK(BM_Evaluate)->RangeMultiplier(4)->Range(64, 1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
