#include "mfd/linsys.hpp"
#include "mfd/pointcloud.hpp"
#include "mfd/stencil.hpp"
#include "mfd/verify.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace mfd;

void BM_Generate(benchmark::State& state)
{
  const auto domain = LevelSetDomain::paper();
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate(domain, n, 7));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Generate)->Arg(500)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond)->Complexity();

void BM_Neighbors(benchmark::State& state)
{
  const PointCloud cloud = generate(LevelSetDomain::paper(), static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(neighbors(cloud, 2.5, 14));
  }
}
BENCHMARK(BM_Neighbors)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_BuildOperators(benchmark::State& state)
{
  const PointCloud cloud = generate(LevelSetDomain::paper(), static_cast<std::size_t>(state.range(0)), 7);
  const int order = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_operators(cloud, order));
  }
}
BENCHMARK(BM_BuildOperators)->Args({ 1000, 2 })->Args({ 4000, 2 })->Args({ 1000, 4 })->Unit(benchmark::kMillisecond);

void BM_VpeSolve(benchmark::State& state)
{
  const PointCloud cloud = generate(LevelSetDomain::paper(), static_cast<std::size_t>(state.range(0)), 7);
  const OperatorBundle ops = build_operators(cloud, 2, {}, false);
  const auto f = [](const Vec2& x) { return manufactured_vpe(x).f; };
  const auto g = [](const Vec2& x) { return manufactured_vpe(x).g; };
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_vpe(cloud, ops, f, g));
  }
}
BENCHMARK(BM_VpeSolve)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_BorderedPressureSolve(benchmark::State& state)
{
  const PointCloud cloud = generate(LevelSetDomain::paper(), static_cast<std::size_t>(state.range(0)), 7);
  const OperatorBundle ops = build_operators(cloud, 2, {}, false);
  const SparseMatrix A = assemble_pressure_matrix(cloud, ops);
  const BorderedSolver solver(A);
  const Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(A.rows(), -1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver.solve(r));
  }
}
BENCHMARK(BM_BorderedPressureSolve)->Arg(1000)->Arg(4000)->Unit(benchmark::kMicrosecond);

void BM_NavierStokesStep(benchmark::State& state)
{
  const PointCloud cloud = generate(LevelSetDomain::paper(), static_cast<std::size_t>(state.range(0)), 7);
  const OperatorBundle ops = build_operators(cloud, 2);
  const NavierStokesStepper stepper(cloud, ops, nse_problem(1.0, 30.0), { Scheme::Imex2, 0.2 * cloud.h });
  FieldState start;
  start.u.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    start.u[i] = exact::velocity(cloud.points[i], 0.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(stepper.step(start));
  }
}
BENCHMARK(BM_NavierStokesStep)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
