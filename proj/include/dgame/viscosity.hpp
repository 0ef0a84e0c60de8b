#ifndef DGAME_VISCOSITY_HPP
#define DGAME_VISCOSITY_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dgame/game_model.hpp"
#include "dgame/hjb_solver.hpp"
#include "dgame/lattice.hpp"

namespace dgame {

/// One time slice of the viscous value psi_sigma on a uniform grid of step dx.
struct ViscousGrid {
  double t = 0.0;
  LatticeDomain domain;  // mesh() == dx
  std::vector<double> values;
  double sigma = 0.0;

  double dx() const { return domain.mesh(); }
};

struct ViscousResult {
  std::vector<ViscousGrid> slices;  // decreasing t, front is T
  double sigma = 0.0;
  double dx = 0.0;
  double dt = 0.0;
  std::vector<double> requested;
  std::vector<double> snapped;

  const ViscousGrid& checkpoint(double requested_t) const;
};

/// dt <= 1 / (2 (d M1 / dx + d sigma^2 / dx^2)).
double viscous_cfl_ceiling(const GameSpec& spec, double sigma, double dx);

/// Backward explicit scheme for
///   psi_t + min_u max_v <grad psi, f> + sigma^2/2 Laplacian psi = 0,
///   psi(T) = g,
/// upwinding each coordinate by the sign of f_i for every control pair,
/// centered second differences, Dirichlet ring held at g. dt <= 0 selects
/// the CFL ceiling. The box is rounded outward to the dx grid.
ViscousResult solve_viscous(const GameSpec& spec, double sigma, const StateBox& box,
                            double dx, double dt, const std::vector<double>& checkpoints,
                            bool parallel = true);

/// max |psi(t0, x) - val_ref(x)| over grid points, optionally restricted to
/// `region`.
double viscosity_gap(const ViscousGrid& psi, const std::function<double(ConstVec)>& val_ref,
                     const std::optional<StateBox>& region = std::nullopt);

/// psi at a state on the grid (nearest grid point).
double viscous_value_at(const ViscousGrid& psi, ConstVec x);

/// Slice CSV preceded by a metadata line with sigma, dx, dt.
void write_viscous_csv(const std::string& path, const ViscousGrid& grid, double dt,
                       const std::vector<std::string>& metadata = {});

}  // namespace dgame

#endif
