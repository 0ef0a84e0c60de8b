#ifndef DGAME_KERNELS_HPP
#define DGAME_KERNELS_HPP

#include <span>

#include "dgame/game_model.hpp"
#include "dgame/hjb_solver.hpp"
#include "dgame/lattice.hpp"

/// Per-time-step sweeps over every lattice point. Each point reads only the
/// input slice, so the OpenMP versions are bitwise identical to the serial
/// references for any thread count.
namespace dgame::kernels {

/// out[k] = H[t, in](x_k). OpenMP over k.
void hamiltonian_sweep(const GameSpec& spec, const LatticeDomain& domain,
                       std::span<const double> in, double t, ValueKind kind,
                       BoundaryPolicy policy, std::span<double> out);

/// Serial reference built on the generic generator API (kolmogorov_rates +
/// apply_generator). Slow; kept for tests and the benchmark.
void hamiltonian_sweep_serial(const GameSpec& spec, const LatticeDomain& domain,
                              std::span<const double> in, double t, ValueKind kind,
                              BoundaryPolicy policy, std::span<double> out);

/// One explicit step of the vanishing-viscosity scheme:
/// out = in + dt * (min_u max_v upwind<grad, f> + sigma^2/2 Laplacian),
/// with boundary points held at `boundary_values`.
void viscous_step(const GameSpec& spec, const LatticeDomain& domain,
                  std::span<const double> in, std::span<const double> boundary_values,
                  double t, double sigma, double dt, std::span<double> out);

void viscous_step_serial(const GameSpec& spec, const LatticeDomain& domain,
                         std::span<const double> in,
                         std::span<const double> boundary_values, double t,
                         double sigma, double dt, std::span<double> out);

}  // namespace dgame::kernels

#endif
