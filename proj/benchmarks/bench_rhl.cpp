#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "rhl/constants.hpp"
#include "rhl/entropy.hpp"
#include "rhl/flows.hpp"
#include "rhl/geometry.hpp"

namespace {

using namespace rhl;

GridSpec torus(int n) { return GridSpec(n, n, 2 * std::numbers::pi, 2 * std::numbers::pi); }

ConformalMetric curved(int n) {
  return ConformalMetric(ScalarField::sample(torus(n), [](double x, double y) { return 0.1 * std::sin(x) * std::sin(y); }));
}

ScalarField smooth(int n) {
  return ScalarField::sample(torus(n), [](double x, double y) { return 1 + 0.5 * std::cos(x) + 0.2 * std::sin(2 * y); });
}

void BM_LaplaceBeltrami(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ConformalMetric g = curved(n);
  const ScalarField u = smooth(n);
  for (auto _ : state) benchmark::DoNotOptimize(geom::laplace_beltrami(g, u));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_LaplaceBeltrami)->Arg(64)->Arg(128)->Arg(256);

void BM_CovariantDerivativePower(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const ConformalMetric g = curved(128);
  const ScalarField u = smooth(128);
  for (auto _ : state) benchmark::DoNotOptimize(geom::covariant_derivative_power(g, u, k));
}
BENCHMARK(BM_CovariantDerivativePower)->DenseRange(1, 3);

void BM_GeodesicDistance(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ConformalMetric g = curved(n);
  for (auto _ : state) benchmark::DoNotOptimize(geom::geodesic_distance(g, {n / 2, n / 2}));
}
BENCHMARK(BM_GeodesicDistance)->Arg(64)->Arg(128);

void BM_CoupledFlow(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  flow::RunConfig c(curved(n).f(), smooth(n));
  c.final_time = 0.05;
  c.dt = flow::cfl_limit(curved(n));
  c.snapshot_every = 8;
  for (auto _ : state) benchmark::DoNotOptimize(flow::run_coupled_flow(c));
  state.counters["steps"] = c.steps();
}
BENCHMARK(BM_CoupledFlow)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ConjugateHeatSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  flow::RunConfig c(curved(n).f(), smooth(n));
  c.final_time = 0.05;
  c.dt = flow::cfl_limit(curved(n));
  c.snapshot_every = 4;
  const auto traj = flow::run_coupled_flow(c).trajectory;
  const ScalarField uT(torus(n), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(flow::conjugate_heat_solve(traj, uT));
}
BENCHMARK(BM_ConjugateHeatSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_WEntropy(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ConformalMetric g = curved(n);
  ScalarField v = smooth(n);
  ScalarField v2(v.spec());
  for (std::size_t c = 0; c < v.size(); ++c) v2[c] = v[c] * v[c];
  const double m = std::sqrt(geom::integrate(g, v2));
  for (std::size_t c = 0; c < v.size(); ++c) v[c] /= m;
  for (auto _ : state) benchmark::DoNotOptimize(entropy::w_entropy(g, v, 0.5));
}
BENCHMARK(BM_WEntropy)->Arg(64)->Arg(128);

void BM_ConstantLedger(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(constants::ConstantLedger());
}
BENCHMARK(BM_ConstantLedger);

}  // namespace

BENCHMARK_MAIN();
