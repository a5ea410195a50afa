#include <benchmark/benchmark.h>

#include <vector>

#include "effgrow/discrete_operator.hpp"
#include "effgrow/eigensolver.hpp"

using namespace effgrow;

namespace {

ModelSpec bench_model(Fragmentation frag, std::size_t M) {
  return make_model(Growth::linear, {1.0, 2}, frag, make_trait_set(M, 4.0, 4.0, MeanKind::arithmetic),
                    make_kernel_random(M, 1));
}

template <bool Parallel, bool Transpose>
void BM_apply(benchmark::State& state) {
  const auto frag = state.range(0) ? Fragmentation::mitosis : Fragmentation::uniform;
  const auto M = static_cast<std::size_t>(state.range(1));
  DiscreteOperator op(bench_model(frag, M), SizeGrid::uniform(0.005, 8.0));
  std::vector<double> x(op.size(), 1.0), y(op.size());
  for (auto _ : state) {
    if constexpr (Transpose)
      Parallel ? op.apply_transpose(x, y) : op.apply_transpose_serial(x, y);
    else
      Parallel ? op.apply(x, y) : op.apply_serial(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * op.size()));
}

void BM_solve(benchmark::State& state) {
  EigenSolverOptions opt;
  opt.method = state.range(0) ? EigenMethod::renewal : EigenMethod::shifted_power;
  DiscreteOperator op(bench_model(Fragmentation::mitosis, 10), SizeGrid::uniform(0.02, 8.0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_eigen(op, opt).lambda);
}

// Args: {mitosis?, M}
#define EFFGROW_APPLY_ARGS ->Args({0, 2})->Args({1, 2})->Args({0, 10})->Args({1, 10})->Unit(benchmark::kMicrosecond)

}  // namespace

BENCHMARK(BM_apply<false, false>) EFFGROW_APPLY_ARGS;
BENCHMARK(BM_apply<true, false>) EFFGROW_APPLY_ARGS;
BENCHMARK(BM_apply<false, true>) EFFGROW_APPLY_ARGS;
BENCHMARK(BM_apply<true, true>) EFFGROW_APPLY_ARGS;
BENCHMARK(BM_solve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
