#include "dgame/viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dgame/csv.hpp"
#include "dgame/errors.hpp"
#include "dgame/kernels.hpp"

namespace dgame {

const ViscousGrid& ViscousResult::checkpoint(double requested_t) const {
  for (std::size_t i = 0; i < requested.size(); ++i) {
    if (std::abs(requested[i] - requested_t) <= 1e-12) {
      for (const auto& s : slices)
        if (s.t == snapped[i]) return s;
    }
  }
  throw ConfigError("checkpoint was not requested from this viscous solve");
}

double viscous_cfl_ceiling(const GameSpec& spec, double sigma, double dx) {
  const double d = static_cast<double>(spec.dim);
  const double rate = d * spec.drift_bound / dx + d * sigma * sigma / (dx * dx);
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (2.0 * rate);
}

ViscousResult solve_viscous(const GameSpec& spec, double sigma, const StateBox& box,
                            double dx, double dt, const std::vector<double>& checkpoints,
                            bool parallel) {
  validate_structure(spec);
  if (!(dx > 0.0)) throw InvalidSpecError("solve_viscous: dx must be positive");
  if (sigma < 0.0) throw InvalidSpecError("solve_viscous: sigma must be nonnegative");
  if (checkpoints.empty()) throw ConfigError("solve_viscous: no checkpoints");
  if (box.lo.size() != spec.dim || box.hi.size() != spec.dim)
    throw InvalidSpecError("solve_viscous: box has wrong dimension");
  const double T = spec.horizon;
  for (double c : checkpoints)
    if (c < 0.0 || c > T) throw ConfigError("solve_viscous: checkpoint outside [0, T]");

  const double ceiling = viscous_cfl_ceiling(spec, sigma, dx);
  if (dt <= 0.0) dt = std::isfinite(ceiling) ? ceiling : T;
  if (dt > ceiling * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "dt = " << dt << " violates the CFL stability ceiling " << ceiling;
    throw StepSizeError(os.str());
  }

  LatticePoint lo(spec.dim), hi(spec.dim);
  for (std::size_t a = 0; a < spec.dim; ++a) {
    lo[a] = static_cast<std::int64_t>(std::floor(box.lo[a] / dx + 1e-9));
    hi[a] = static_cast<std::int64_t>(std::ceil(box.hi[a] / dx - 1e-9));
    if (hi[a] - lo[a] < 2)
      throw InvalidSpecError("solve_viscous: box needs at least one interior point per axis");
  }
  LatticeDomain domain(dx, lo, hi);

  const double t_min = *std::min_element(checkpoints.begin(), checkpoints.end());
  const auto n_steps = static_cast<std::size_t>(
      std::max(0.0, std::ceil((T - t_min) / dt - 1e-9)));
  const double step = n_steps == 0 ? dt : (T - t_min) / static_cast<double>(n_steps);
  auto time_of = [&](std::size_t k) {
    return k == n_steps ? t_min : T - static_cast<double>(k) * step;
  };

  ViscousResult result;
  result.sigma = sigma;
  result.dx = dx;
  result.dt = step;
  result.requested = checkpoints;
  std::vector<bool> wanted(n_steps + 1, false);
  wanted[0] = true;
  for (double c : checkpoints) {
    auto k = n_steps == 0 ? 0
                          : static_cast<std::size_t>(std::ceil((T - c) / step - 1e-9));
    k = std::min(k, n_steps);
    wanted[k] = true;
    result.snapped.push_back(time_of(k));
  }

  ValueGrid g = terminal_grid(spec, domain);
  ViscousGrid current{T, domain, g.values, sigma};
  result.slices.push_back(current);
  std::vector<double> next(domain.size());
  for (std::size_t s = 1; s <= n_steps; ++s) {
    const double t = time_of(s - 1);
    if (parallel)
      kernels::viscous_step(spec, domain, current.values, g.values, t, sigma, step, next);
    else
      kernels::viscous_step_serial(spec, domain, current.values, g.values, t, sigma, step,
                                   next);
    current.values.swap(next);
    current.t = time_of(s);
    if (wanted[s]) result.slices.push_back(current);
  }
  return result;
}

double viscosity_gap(const ViscousGrid& psi, const std::function<double(ConstVec)>& val_ref,
                     const std::optional<StateBox>& region) {
  State xs(psi.domain.dim());
  double gap = 0.0;
  for (std::size_t k = 0; k < psi.values.size(); ++k) {
    psi.domain.state_into(k, xs);
    if (region) {
      bool inside = true;
      for (std::size_t a = 0; a < xs.size(); ++a)
        inside = inside && xs[a] >= region->lo[a] - 1e-12 && xs[a] <= region->hi[a] + 1e-12;
      if (!inside) continue;
    }
    gap = std::max(gap, std::abs(psi.values[k] - val_ref(xs)));
  }
  return gap;
}

double viscous_value_at(const ViscousGrid& psi, ConstVec x) {
  auto p = nearest_lattice_point(x, psi.dx());
  auto k = psi.domain.index_of(p);
  if (!k) throw TruncationError("viscous_value_at: point outside the grid");
  return psi.values[*k];
}

void write_viscous_csv(const std::string& path, const ViscousGrid& grid, double dt,
                       const std::vector<std::string>& metadata) {
  std::vector<std::string> meta = metadata;
  meta.push_back("sigma=" + format_double(grid.sigma) + " dx=" + format_double(grid.dx()) +
                 " dt=" + format_double(dt));
  write_slice_csv(path, ValueGrid{grid.t, grid.domain, grid.values}, meta);
}

}  // namespace dgame
