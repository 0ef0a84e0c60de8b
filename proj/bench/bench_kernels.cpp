// Serial reference sweeps against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <cmath>

#include "dgame/hjb_solver.hpp"
#include "dgame/kernels.hpp"

using namespace dgame;

namespace {

struct Setup {
  GameSpec spec;
  LatticeDomain domain;
  std::vector<double> in;
  std::vector<double> out;
};

Setup make_setup(double h) {
  Setup s{catalog_game("G2"), LatticeDomain(h, {0, 0}, {0, 0}), {}, {}};
  const auto n = static_cast<std::int64_t>(std::llround(2.0 / h));
  s.domain = LatticeDomain(h, {-n, -n}, {n, n});
  s.in.resize(s.domain.size());
  s.out.resize(s.domain.size());
  for (std::size_t k = 0; k < s.domain.size(); ++k) s.in[k] = eval_payoff(s.spec, s.domain.state(k));
  return s;
}

void BM_Hamiltonian(benchmark::State& state, bool parallel) {
  auto s = make_setup(1.0 / static_cast<double>(state.range(0)));
  for (auto _ : state) {
    if (parallel)
      kernels::hamiltonian_sweep(s.spec, s.domain, s.in, 0.5, ValueKind::upper,
                                 BoundaryPolicy::freeze, s.out);
    else
      kernels::hamiltonian_sweep_serial(s.spec, s.domain, s.in, 0.5, ValueKind::upper,
                                        BoundaryPolicy::freeze, s.out);
    benchmark::DoNotOptimize(s.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.domain.size()));
}

void BM_Viscous(benchmark::State& state, bool parallel) {
  auto s = make_setup(1.0 / static_cast<double>(state.range(0)));
  const double dx = s.domain.mesh();
  const double dt = 0.5 / (2.0 * (2.0 * s.spec.drift_bound / dx + 2.0 * 0.04 / (dx * dx)));
  for (auto _ : state) {
    if (parallel)
      kernels::viscous_step(s.spec, s.domain, s.in, s.in, 0.5, 0.2, dt, s.out);
    else
      kernels::viscous_step_serial(s.spec, s.domain, s.in, s.in, 0.5, 0.2, dt, s.out);
    benchmark::DoNotOptimize(s.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.domain.size()));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Hamiltonian, serial, false)->Arg(20)->Arg(50);
BENCHMARK_CAPTURE(BM_Hamiltonian, openmp, true)->Arg(20)->Arg(50)->Arg(100);
BENCHMARK_CAPTURE(BM_Viscous, serial, false)->Arg(20)->Arg(50)->Arg(100);
BENCHMARK_CAPTURE(BM_Viscous, openmp, true)->Arg(20)->Arg(50)->Arg(100);

BENCHMARK_MAIN();
