// Parallel vs serial evaluation of the pointwise error field on (0, 1).

#include "nonloc/harness.hpp"

#include <benchmark/benchmark.h>

using namespace nonloc;

namespace {

struct Fixture {
  DensitySpec d = make_bump_density(BumpOptions{});
  Domain om = Domain::interval(0.0, 1.0);
  Mat m = momentum_matrix(d).m;
  TestFunction u = make_compatible_function(om, m, "cos_k", {{"k", 1}});
  KernelFamily fam{d, 0.05};
  EvaluationGrid grid = make_evaluation_grid(u, fam, om, 256);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_ErrorFieldSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_error_field_serial(f.u, f.fam, f.om, f.m, f.grid.points, {}));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.grid.points.size()));
}

void BM_ErrorFieldParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_error_field(f.u, f.fam, f.om, f.m, f.grid.points, {},
                                                  Route::complement_decomposition, workers));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.grid.points.size()));
}

}  // namespace

BENCHMARK(BM_ErrorFieldSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ErrorFieldParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
