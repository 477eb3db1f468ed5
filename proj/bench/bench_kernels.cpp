#include <benchmark/benchmark.h>

#include <cmath>

#include "levypide/kernels.hpp"

using namespace levypide;

namespace {

struct Setup {
  PideProblem problem;
  SpaceTimeField field;
  kernels::SliceContext ctx;

  Setup(const LevyTriple& triple, int points, std::size_t particles)
      : field(SpaceGrid(-3.14159, 3.14159, points, true), TimeGrid(-0.25, 1.0 / 64.0)) {
    problem.triple = triple;
    problem.G = [](double, std::span<const double>, std::span<const double> u, std::span<double> out) {
      out[0] = -u[0];
    };
    problem.phi = [](std::span<const double> x, std::span<double> out) { out[0] = std::sin(x[0]); };
    for (int i = 0; i < field.time().nodes(); ++i) {
      for (std::size_t n = 0; n < field.space().size(); ++n) {
        field.at(i, n) = std::sin(field.space().coordinate(0, static_cast<int>(n)));
      }
    }
    ctx.problem = &problem;
    ctx.previous = &field;
    ctx.current = &field;
    ctx.target = 4;
    ctx.restart = 3;
    ctx.substeps = 4;
    ctx.particles = particles;
    ctx.seed = 1;
  }
};

void run(benchmark::State& state, const LevyTriple& triple, bool parallel) {
  Setup s(triple, static_cast<int>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    auto out = parallel ? kernels::estimate_slice_parallel(s.ctx) : kernels::estimate_slice_serial(s.ctx);
    benchmark::DoNotOptimize(out.values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * s.ctx.substeps);
}

void BM_SliceSerialBrownian(benchmark::State& state) { run(state, LevyTriple::brownian(1, 1.0), false); }
void BM_SliceParallelBrownian(benchmark::State& state) { run(state, LevyTriple::brownian(1, 1.0), true); }
void BM_SliceSerialStable(benchmark::State& state) { run(state, LevyTriple::alpha_stable(1, 1.5, 1.0), false); }
void BM_SliceParallelStable(benchmark::State& state) { run(state, LevyTriple::alpha_stable(1, 1.5, 1.0), true); }

}  // namespace

BENCHMARK(BM_SliceSerialBrownian)->Args({129, 10000})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SliceParallelBrownian)->Args({129, 10000})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SliceSerialStable)->Args({129, 10000})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SliceParallelStable)->Args({129, 10000})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
