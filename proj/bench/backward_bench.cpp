// Serial reference vs OpenMP backward pass on the time-invariant binary
// example. Run with --benchmark_filter to pick a size.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "nrdf/backward.hpp"

namespace {

struct Fixture {
  nrdf::MarkovSource source;
  nrdf::DistortionModel distortion;
  nrdf::LagrangeSchedule schedule;
  std::vector<nrdf::BeliefGrid> grids;
};

Fixture make_fixture(std::size_t levels, std::size_t horizon) {
  std::vector<double> alphas(horizon, 0.4);
  auto source = nrdf::MarkovSource::binary_symmetric(alphas, nrdf::ProbVector::uniform(2));
  nrdf::StageAlphabets a{std::vector<std::size_t>(horizon + 1, 2), std::vector<std::size_t>(horizon + 1, 2)};
  auto distortion = nrdf::DistortionModel::hamming(a);
  std::vector<std::size_t> lv(horizon, levels);
  return Fixture{std::move(source), std::move(distortion), nrdf::LagrangeSchedule::constant(horizon, -2.0),
                 nrdf::make_grids(a, lv)};
}

void BM_BackwardReference(benchmark::State& state) {
  const Fixture f = make_fixture(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  std::size_t cells = 0;
  for (auto _ : state) {
    auto tables = nrdf::backward_pass_reference(f.source, f.distortion, f.grids, f.schedule, {});
    cells = tables.total_cells();
    benchmark::DoNotOptimize(tables.values.front().values.data());
  }
  state.counters["cells/s"] = benchmark::Counter(static_cast<double>(cells), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_BackwardParallel(benchmark::State& state) {
  const Fixture f = make_fixture(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  nrdf::BackwardOptions opts;
  opts.workers = static_cast<int>(state.range(2));
  std::size_t cells = 0;
  for (auto _ : state) {
    auto tables = nrdf::backward_pass(f.source, f.distortion, f.grids, f.schedule, opts);
    cells = tables.total_cells();
    benchmark::DoNotOptimize(tables.values.front().values.data());
  }
  state.counters["cells/s"] = benchmark::Counter(static_cast<double>(cells), benchmark::Counter::kIsIterationInvariantRate);
}

}  // namespace

BENCHMARK(BM_BackwardReference)->Args({5, 10})->Args({10, 10})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BackwardParallel)
    ->ArgsProduct({{5, 10}, {10}, {1, 2, 4, 8, 16}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
