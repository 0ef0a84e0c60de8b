#ifndef DGAME_HJB_SOLVER_HPP
#define DGAME_HJB_SOLVER_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "dgame/game_model.hpp"
#include "dgame/lattice.hpp"

namespace dgame {

/// upper: min_u max_v (first player commits first). lower: max_v min_u.
enum class ValueKind { upper, lower };

/// freeze: a jump target outside the box takes the value of the nearest
/// in-box point, which for a one-step axis jump is the origin point itself,
/// so the term vanishes. strict: such a target is an error.
enum class BoundaryPolicy { freeze, strict };

enum class TimeScheme { euler, rk4 };

const char* to_string(ValueKind k);
const char* to_string(BoundaryPolicy p);
const char* to_string(TimeScheme s);

struct ValueGrid {
  double t = 0.0;
  LatticeDomain domain;
  std::vector<double> values;

  /// Throws TruncationError outside the box.
  double at(ConstPoint p) const;
};

struct StateBox {
  State lo;
  State hi;
};

struct SolveOptions {
  TimeScheme scheme = TimeScheme::euler;
  BoundaryPolicy boundary = BoundaryPolicy::freeze;
  /// Keep every integration step, not just checkpoints (needed for
  /// feedback lookups during simulation).
  bool keep_all_steps = false;
  /// Relative slack of the weighted-norm growth detector.
  double growth_tolerance = 1e-6;
  /// false runs the serial reference sweep.
  bool parallel = true;
};

struct SolveResult {
  /// Ordered by decreasing t; slices.front().t == T.
  std::vector<ValueGrid> slices;
  ValueKind kind = ValueKind::upper;
  double h = 0.0;
  double dt = 0.0;
  BoundaryPolicy boundary = BoundaryPolicy::freeze;
  TimeScheme scheme = TimeScheme::euler;
  /// Checkpoints as requested and as snapped onto the integration grid.
  std::vector<double> requested;
  std::vector<double> snapped;

  /// Slice with the largest t not exceeding `t` (clamped to the solved range).
  const ValueGrid& slice_at_or_below(double t) const;
  /// Slice recorded for a requested checkpoint.
  const ValueGrid& checkpoint(double requested_t) const;
};

/// Largest stable explicit step h / (2 d M1); infinite for zero drift.
double stability_ceiling(const GameSpec& spec, double h);

/// min_u max_v (upper) or max_v min_u (lower) of the lattice generator
/// applied to `grid` at lattice point x.
double hamiltonian(const ValueGrid& grid, const GameSpec& spec, double t,
                   ConstPoint x, ValueKind kind,
                   BoundaryPolicy policy = BoundaryPolicy::freeze);

/// The map rho -> H[t, rho] over the whole box.
ValueGrid hamiltonian_map(const ValueGrid& grid, const GameSpec& spec, double t,
                          ValueKind kind,
                          BoundaryPolicy policy = BoundaryPolicy::freeze);

/// Index into u_grid attaining min_u max_v of the generator; ties go to
/// the lowest index.
std::size_t upper_argmin(const ValueGrid& grid, const GameSpec& spec, double t,
                         ConstPoint x, BoundaryPolicy policy = BoundaryPolicy::freeze);

/// sup over the box of |a(x) - b(x)| / (h + |x|).
double weighted_norm(const ValueGrid& a, const ValueGrid& b);
double weighted_norm(const ValueGrid& a);

/// Lattice box covering x0_box inflated by M1 (T - t0) + pad per coordinate,
/// rounded outward. Throws ResourceError above max_points.
LatticeDomain truncate_domain(const GameSpec& spec, const StateBox& x0_box,
                              double t0, double h, double pad,
                              std::size_t max_points = 20'000'000);

/// Terminal slice g(x) on the lattice.
ValueGrid terminal_grid(const GameSpec& spec, const LatticeDomain& domain);

/// Integrates d eta/dt = -H[t, eta] from T down to min(checkpoints).
/// The step is shrunk so the grid lands on the earliest checkpoint; other
/// checkpoints snap down to the grid.
SolveResult solve_backward(const GameSpec& spec, const LatticeDomain& domain,
                           double dt, ValueKind kind,
                           const std::vector<double>& checkpoints,
                           const SolveOptions& options = {});

/// Truncation diagnostic: max |eta_pad - eta_2pad| at t0 over the lattice
/// points of x0_box (rounded outward). Not a bound, only a measured change.
double boundary_influence(const GameSpec& spec, const StateBox& x0_box, double t0,
                          double h, double pad, double dt, ValueKind kind,
                          const SolveOptions& options = {});

/// Columns t, x_1..x_d, value; `metadata` lines are written first as
/// "# ..." comments.
void write_slice_csv(const std::string& path, const ValueGrid& grid,
                     const std::vector<std::string>& metadata = {});

}  // namespace dgame

#endif
