#include <benchmark/benchmark.h>

#include <polaron/branches.hpp>
#include <polaron/friedrichs.hpp>
#include <polaron/oracle.hpp>
#include <polaron/selfenergy.hpp>

using namespace polaron;

namespace {

ModelParams model(double alpha) {
  ModelParams m;
  m.dim = 3;
  m.alpha = alpha;
  return m;
}

BranchOptions options() {
  BranchOptions o;
  o.lambda2_margin = 0.01;
  return o;
}

}  // namespace

static void BM_M2(benchmark::State& state) {
  QuadratureSpec s;
  s.radial_nodes = static_cast<int>(state.range(0));
  SelfEnergy se(model(0.1), s);
  Vec p{0.4, 0, 0}, q{0.1, 0.2, -0.3};
  double xi = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(se.m2(p, xi, q));
    xi += 1e-12;
  }
}
BENCHMARK(BM_M2)->Arg(16)->Arg(32)->Arg(64);

static void BM_Delta(benchmark::State& state) {
  BranchSolver bs(model(0.1), QuadratureSpec{}, options());
  const Vec p{0.0, 0.0, 0.0};
  FriedrichsSolver f(bs.reduced_operator(p, 0.0), bs.quad());
  const int order = static_cast<int>(state.range(0));
  double z = -0.1;
  f.delta(z, order);  // the ring kernel is tabulated on first use
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.delta(z, order));
    z -= 1e-9;
  }
}
BENCHMARK(BM_Delta)->Arg(0)->Arg(1);

static void BM_GroundState(benchmark::State& state) {
  BranchSolver bs(model(0.1), QuadratureSpec{}, options());
  Vec p{0.1 * state.range(0), 0.0, 0.0};
  double kappa = bs.cap(p, KappaRule::fraction(0.9)).kappa;
  for (auto _ : state) benchmark::DoNotOptimize(bs.ground_state(p, kappa));
}
BENCHMARK(BM_GroundState)->Arg(0)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_DispersionPoint(benchmark::State& state) {
  BranchOptions o = options();
  o.method = state.range(0) ? RootMethod::toms748 : RootMethod::bisection;
  BranchSolver bs(model(0.1), QuadratureSpec{}, o);
  Vec p{0.5, 0, 0}, q{0.2, 0.1, 0};
  double kappa = bs.cap(p, KappaRule::fraction(0.9)).kappa;
  for (auto _ : state) benchmark::DoNotOptimize(bs.dispersion_point(p, q, kappa));
}
BENCHMARK(BM_DispersionPoint)->Arg(0)->Arg(1);

static void BM_OracleGround(benchmark::State& state) {
  DiscreteMeasure g = grid_measure(3.0, static_cast<int>(state.range(0)), 3);
  ModelParams m = model(0.1);
  const Vec p{0.0, 0.0, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(ground_energy(build(m, p, g, 2)).value);
}
BENCHMARK(BM_OracleGround)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
