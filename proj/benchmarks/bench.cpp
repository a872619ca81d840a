#include <benchmark/benchmark.h>

#include <cmath>

#include "canard/expr.hpp"
#include "canard/fold.hpp"
#include "canard/interval_function.hpp"
#include "canard/iteration.hpp"
#include "canard/ode.hpp"

using namespace canard;

namespace {

SystemDef vdp() { return SystemDef::make("y - x^3/3 + x", "eps*(z - x)", {{"eps", 0.05}}); }

void BM_ExprEvaluate(benchmark::State& state) {
  SystemDef sys = vdp();
  double x = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sys.eval_F(x, -0.6, 0.9));
    x = -x;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ExprEvaluate);

void BM_ExprGradient(benchmark::State& state) {
  SystemDef sys = vdp();
  double x = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sys.grad_F(x, -0.6, 0.9));
    x = -x;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ExprGradient);

void BM_ChebBuildExp(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        IntervalFunction::build([](double x) { return std::exp(x); }, -1, 1));
  }
}
BENCHMARK(BM_ChebBuildExp)->Unit(benchmark::kMicrosecond);

// the Runge function needs a degree near 180 at 1e-12
void BM_ChebBuildRunge(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        IntervalFunction::build([](double x) { return 1.0 / (1 + 25 * x * x); }, -1, 1));
  }
}
BENCHMARK(BM_ChebBuildRunge)->Unit(benchmark::kMicrosecond);

void BM_ChebEvaluate(benchmark::State& state) {
  IntervalFunction runge =
      IntervalFunction::build([](double x) { return 1.0 / (1 + 25 * x * x); }, -1, 1);
  double x = 0.234;
  for (auto _ : state) {
    benchmark::DoNotOptimize(runge(x));
    x = -x;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ChebEvaluate);

void BM_ChebRoots(benchmark::State& state) {
  IntervalFunction osc =
      IntervalFunction::build([](double x) { return std::sin(20 * x); }, -1, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(osc.roots());
  }
}
BENCHMARK(BM_ChebRoots)->Unit(benchmark::kMicrosecond);

void BM_ChebDeflate(benchmark::State& state) {
  IntervalFunction lam = IntervalFunction::build([](double x) { return 1 - x * x; }, 0.2, 1.8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lam.deflate_root(1.0));
  }
}
BENCHMARK(BM_ChebDeflate);

void BM_OdeRelaxationOrbit(benchmark::State& state) {
  SystemDef sys = vdp();
  IntegratorOptions opts;
  opts.rtol = 1e-9;
  opts.atol = 1e-12;
  std::int64_t steps = 0;
  for (auto _ : state) {
    OdeStats stats;
    integrate_raw(sys, 0.9, 2.0, 0.0, 0.0, 40.0, opts, stats, {});
    steps += stats.n_steps;
  }
  state.SetItemsProcessed(steps);  // accepted steps per second
}
BENCHMARK(BM_OdeRelaxationOrbit)->Unit(benchmark::kMillisecond);

void BM_FindFold(benchmark::State& state) {
  SystemDef sys = vdp();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        find_fold(sys, 0.9, 0.9, DomainSpec::fixed_interval(0.2, 1.8), -0.657));
  }
}
BENCHMARK(BM_FindFold)->Unit(benchmark::kMicrosecond);

void BM_IterateThreeSteps(benchmark::State& state) {
  SystemDef sys = vdp();
  FoldData fold = find_fold(sys, 0.9, 0.9, DomainSpec::fixed_interval(0.2, 1.8), -0.657);
  for (auto _ : state) {
    benchmark::DoNotOptimize(iterate(fold, sys, 3));
  }
}
BENCHMARK(BM_IterateThreeSteps)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
