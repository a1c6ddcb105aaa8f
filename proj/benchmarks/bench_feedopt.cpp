#include <random>
#include <string>

#include <benchmark/benchmark.h>

#include "feedopt/case_io.hpp"
#include "feedopt/numerics.hpp"
#include "feedopt/oracle.hpp"
#include "feedopt/sim.hpp"

using namespace feedopt;

namespace {

Matrix hurwitz(Eigen::Index n) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  a -= (a.eigenvalues().real().maxCoeff() + 0.5) * Matrix::Identity(n, n);
  return a;
}

GridSetup nine_bus() {
  return make_grid_setup(load_grid_case(std::string(FEEDOPT_DATA_DIR) + "/cases/nine_bus.json"));
}

void BM_Lyapunov(benchmark::State& state) {
  const Matrix a = hurwitz(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_lyapunov(a));
}
BENCHMARK(BM_Lyapunov)->Arg(8)->Arg(26)->Arg(60)->Arg(120);

void BM_MatrixExponential(benchmark::State& state) {
  const Matrix a = 0.1 * hurwitz(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(matrix_exponential(a));
}
BENCHMARK(BM_MatrixExponential)->Arg(8)->Arg(26)->Arg(60);

void BM_Certify(benchmark::State& state) {
  const grid::GridCase g = load_grid_case(std::string(FEEDOPT_DATA_DIR) + "/cases/nine_bus.json");
  for (auto _ : state) benchmark::DoNotOptimize(make_grid_setup(g));
}
BENCHMARK(BM_Certify)->Unit(benchmark::kMillisecond);

void BM_Oracle(benchmark::State& state) {
  const GridSetup setup = nine_bus();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_instantaneous(*setup.model.objective, setup.model.ssm,
                                                 setup.grid.loads(), setup.default_u0));
  }
}
BENCHMARK(BM_Oracle)->Unit(benchmark::kMillisecond);

// Cost per closed-loop step on the 9-bus case.
void BM_SimulateSteps(benchmark::State& state) {
  const GridSetup setup = nine_bus();
  Scenario s;
  s.step_s = 0.1;
  s.duration_s = 0.1 * static_cast<double>(state.range(0));
  s.record_every = state.range(0);
  s.epsilon = EpsilonPolicy::fraction_of_star(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(run_grid(setup, s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateSteps)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
