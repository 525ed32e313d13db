#include <random>

#include <benchmark/benchmark.h>

#include "famloc/activation_map.hpp"
#include "famloc/gap_head.hpp"
#include "famloc/localizer.hpp"
#include "famloc/metrics.hpp"
#include "famloc/tuner.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace {

using namespace famloc;

void BM_ComputeFam(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto stack = testing::random_stack(rng, k, 14, 14);
  const WeightVector w{testing::random_vector(rng, k), 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(compute_fam(stack, w));
}
BENCHMARK(BM_ComputeFam)->Arg(64)->Arg(512)->Arg(2048);

void BM_ConvForward(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto input = testing::random_stack(rng, c, 14, 14);
  const auto bank = testing::random_bank(rng, c, c);
  for (auto _ : state) benchmark::DoNotOptimize(conv_forward(input, bank));
}
BENCHMARK(BM_ConvForward)->Arg(8)->Arg(64);

void BM_ConnectedComponents(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto mask = testing::random_mask(rng, n, n, 0.45);
  for (auto _ : state) benchmark::DoNotOptimize(connected_components(mask));
}
BENCHMARK(BM_ConnectedComponents)->Arg(14)->Arg(64)->Arg(256);

void BM_GridSearch(benchmark::State& state) {
  const auto validation = testing::tuner_fixture();
  const auto iou_grid = default_iou_grid();
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(grid_search(validation, GridSpec{}, iou_grid, threads));
  }
}
BENCHMARK(BM_GridSearch)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
