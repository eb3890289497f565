#include <benchmark/benchmark.h>

#include "epnozzle/solver.hpp"

using namespace epn;

namespace {

BackgroundParams params() {
  BackgroundParams p;
  p.gamma = 1.4;
  p.rho0 = 1.2;
  p.e0 = 0.1;
  return p;
}

void BM_Background(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_background(params(), n));
}
BENCHMARK(BM_Background)->Arg(128)->Arg(1024);

void BM_CoupledFactorise(benchmark::State& state) {
  const int n1 = static_cast<int>(state.range(0));
  const BaseState base = BaseState::build(params(), n1, n1 / 2);
  for (auto _ : state) benchmark::DoNotOptimize(CoupledOperator(base.coefficients));
  state.SetLabel(std::to_string(n1) + "x" + std::to_string(n1 / 2));
}
BENCHMARK(BM_CoupledFactorise)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_PoissonSolve(benchmark::State& state) {
  const int n1 = static_cast<int>(state.range(0));
  const Grid2D g(n1, n1 / 2, 1.0);
  const PoissonOperator op(g);
  const ScalarField rhs = ScalarField::from_function(g, [](double a, double b) { return a * b * (1 - b); });
  for (auto _ : state) benchmark::DoNotOptimize(op.solve(rhs));
}
BENCHMARK(BM_PoissonSolve)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_InnerSolve(benchmark::State& state) {
  const int n1 = static_cast<int>(state.range(0));
  const NozzleSolver solver(BaseState::build(params(), n1, n1 / 2));
  const BoundaryData bd = BoundaryData::from_perturbation(solver.base(), Perturbation::uniform(0.01));
  const TransportIterate w = TransportIterate::background(solver.base());
  const PotentialState zero = PotentialState::zero(solver.base().grid);
  for (auto _ : state) benchmark::DoNotOptimize(solver.inner_solve(bd, w, zero));
}
BENCHMARK(BM_InnerSolve)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FlowMap(benchmark::State& state) {
  const int n1 = static_cast<int>(state.range(0));
  const NozzleSolver solver(BaseState::build(params(), n1, n1 / 2));
  const BoundaryData bd = BoundaryData::from_perturbation(solver.base(), Perturbation::uniform(0.01));
  const TransportIterate w = TransportIterate::background(solver.base());
  const InnerResult inner = solver.inner_solve(bd, w, PotentialState::zero(solver.base().grid));
  const VectorField v = solver.mass_flux(w, inner.u);
  for (auto _ : state) {
    const FlowMap fm = flow_map(compute_stream(v));
    benchmark::DoNotOptimize(transport_W(bd.entropy_en, bd.pseudo_en, fm));
  }
}
BENCHMARK(BM_FlowMap)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_OuterIterate(benchmark::State& state) {
  const int n1 = static_cast<int>(state.range(0));
  const NozzleSolver solver(BaseState::build(params(), n1, n1 / 2));
  const BoundaryData bd = BoundaryData::from_perturbation(solver.base(), Perturbation::uniform(0.01));
  for (auto _ : state) benchmark::DoNotOptimize(solver.outer_iterate(bd));
}
BENCHMARK(BM_OuterIterate)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
