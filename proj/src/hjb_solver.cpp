#include "dgame/hjb_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dgame/csv.hpp"
#include "dgame/errors.hpp"
#include "dgame/kernels.hpp"

namespace dgame {

const char* to_string(ValueKind k) { return k == ValueKind::upper ? "upper" : "lower"; }
const char* to_string(BoundaryPolicy p) {
  return p == BoundaryPolicy::freeze ? "freeze" : "strict";
}
const char* to_string(TimeScheme s) { return s == TimeScheme::euler ? "euler" : "rk4"; }

double ValueGrid::at(ConstPoint p) const {
  auto k = domain.index_of(p);
  if (!k) throw TruncationError("lattice point outside the solved box");
  return values[*k];
}

const ValueGrid& SolveResult::slice_at_or_below(double t) const {
  // slices are in decreasing t; find the first with slice.t <= t.
  for (const auto& s : slices)
    if (s.t <= t + 1e-12) return s;
  return slices.back();
}

const ValueGrid& SolveResult::checkpoint(double requested_t) const {
  for (std::size_t i = 0; i < requested.size(); ++i) {
    if (std::abs(requested[i] - requested_t) <= 1e-12) {
      for (const auto& s : slices)
        if (s.t == snapped[i]) return s;
    }
  }
  throw ConfigError("checkpoint was not requested from this solve");
}

double stability_ceiling(const GameSpec& spec, double h) {
  if (spec.drift_bound <= 0.0) return std::numeric_limits<double>::infinity();
  return h / (2.0 * static_cast<double>(spec.dim) * spec.drift_bound);
}

namespace {

LatticeFunction frozen_lookup(const ValueGrid& grid, BoundaryPolicy policy) {
  return [&grid, policy](ConstPoint p) -> double {
    if (auto k = grid.domain.index_of(p)) return grid.values[*k];
    if (policy == BoundaryPolicy::strict)
      throw TruncationError("jump target leaves the lattice box under strict boundary policy");
    LatticePoint q(p.begin(), p.end());
    for (std::size_t a = 0; a < q.size(); ++a)
      q[a] = std::clamp(q[a], grid.domain.lo()[a], grid.domain.hi()[a]);
    return grid.values[*grid.domain.index_of(q)];
  };
}

}  // namespace

double hamiltonian(const ValueGrid& grid, const GameSpec& spec, double t,
                   ConstPoint x, ValueKind kind, BoundaryPolicy policy) {
  if (!grid.domain.contains(x)) throw TruncationError("hamiltonian: point outside the box");
  auto phi = frozen_lookup(grid, policy);
  const double h = grid.domain.mesh();
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t nu = spec.u_grid.size(), nv = spec.v_grid.size();
  auto gen = [&](std::size_t ui, std::size_t vi) {
    return apply_generator(phi, spec, t, x, spec.u_grid[ui], spec.v_grid[vi], h);
  };
  if (kind == ValueKind::upper) {
    double best = inf;
    for (std::size_t ui = 0; ui < nu; ++ui) {
      double m = -inf;
      for (std::size_t vi = 0; vi < nv; ++vi) m = std::max(m, gen(ui, vi));
      best = std::min(best, m);
    }
    return best;
  }
  double best = -inf;
  for (std::size_t vi = 0; vi < nv; ++vi) {
    double m = inf;
    for (std::size_t ui = 0; ui < nu; ++ui) m = std::min(m, gen(ui, vi));
    best = std::max(best, m);
  }
  return best;
}

std::size_t upper_argmin(const ValueGrid& grid, const GameSpec& spec, double t,
                         ConstPoint x, BoundaryPolicy policy) {
  if (!grid.domain.contains(x)) throw TruncationError("feedback: point outside the box");
  auto phi = frozen_lookup(grid, policy);
  const double h = grid.domain.mesh();
  std::size_t arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t ui = 0; ui < spec.u_grid.size(); ++ui) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t vi = 0; vi < spec.v_grid.size(); ++vi)
      m = std::max(m, apply_generator(phi, spec, t, x, spec.u_grid[ui], spec.v_grid[vi], h));
    if (m < best) {
      best = m;
      arg = ui;
    }
  }
  return arg;
}

ValueGrid hamiltonian_map(const ValueGrid& grid, const GameSpec& spec, double t,
                          ValueKind kind, BoundaryPolicy policy) {
  ValueGrid out{t, grid.domain, std::vector<double>(grid.values.size())};
  kernels::hamiltonian_sweep(spec, grid.domain, grid.values, t, kind, policy, out.values);
  return out;
}

namespace {

double point_weight(const LatticeDomain& dom, std::size_t k, std::span<double> xs) {
  dom.state_into(k, xs);
  double s = 0.0;
  for (double c : xs) s += c * c;
  return dom.mesh() + std::sqrt(s);
}

}  // namespace

double weighted_norm(const ValueGrid& a, const ValueGrid& b) {
  if (!(a.domain == b.domain))
    throw InvalidSpecError("weighted_norm: grids live on different boxes");
  State xs(a.domain.dim());
  double sup = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k)
    sup = std::max(sup, std::abs(a.values[k] - b.values[k]) / point_weight(a.domain, k, xs));
  return sup;
}

double weighted_norm(const ValueGrid& a) {
  State xs(a.domain.dim());
  double sup = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k)
    sup = std::max(sup, std::abs(a.values[k]) / point_weight(a.domain, k, xs));
  return sup;
}

LatticeDomain truncate_domain(const GameSpec& spec, const StateBox& x0_box,
                              double t0, double h, double pad, std::size_t max_points) {
  if (!(h > 0.0)) throw InvalidSpecError("truncate_domain: h must be positive");
  if (pad < 0.0) throw InvalidSpecError("truncate_domain: pad must be nonnegative");
  if (x0_box.lo.size() != spec.dim || x0_box.hi.size() != spec.dim)
    throw InvalidSpecError("truncate_domain: box has wrong dimension");
  const double radius = spec.drift_bound * std::max(spec.horizon - t0, 0.0) + pad;
  LatticePoint lo(spec.dim), hi(spec.dim);
  double count = 1.0;
  for (std::size_t a = 0; a < spec.dim; ++a) {
    // 1e-9 absorbs representation error such as -2.0 / 0.1 = -20.000000000000004.
    lo[a] = static_cast<std::int64_t>(std::floor((x0_box.lo[a] - radius) / h + 1e-9));
    hi[a] = static_cast<std::int64_t>(std::ceil((x0_box.hi[a] + radius) / h - 1e-9));
    count *= static_cast<double>(hi[a] - lo[a] + 1);
  }
  if (count > static_cast<double>(max_points)) {
    const double suggest = h * std::pow(count / static_cast<double>(max_points),
                                        1.0 / static_cast<double>(spec.dim));
    std::ostringstream os;
    os << "lattice box has " << count << " points, above the budget of " << max_points
       << "; try h >= " << suggest;
    throw ResourceError(os.str());
  }
  return LatticeDomain(h, lo, hi);
}

ValueGrid terminal_grid(const GameSpec& spec, const LatticeDomain& domain) {
  ValueGrid g{spec.horizon, domain, std::vector<double>(domain.size())};
  State xs(domain.dim());
  for (std::size_t k = 0; k < domain.size(); ++k) {
    domain.state_into(k, xs);
    g.values[k] = eval_payoff(spec, xs);
  }
  return g;
}

SolveResult solve_backward(const GameSpec& spec, const LatticeDomain& domain,
                           double dt, ValueKind kind,
                           const std::vector<double>& checkpoints,
                           const SolveOptions& options) {
  validate_structure(spec);
  if (domain.dim() != spec.dim) throw InvalidSpecError("solve_backward: domain dimension");
  if (checkpoints.empty()) throw ConfigError("solve_backward: no checkpoints");
  if (!(dt > 0.0)) throw StepSizeError("solve_backward: dt must be positive");
  const double T = spec.horizon;
  for (double c : checkpoints)
    if (c < 0.0 || c > T) throw ConfigError("solve_backward: checkpoint outside [0, T]");
  const double h = domain.mesh();
  const double ceiling = stability_ceiling(spec, h);
  if (dt > ceiling * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "dt = " << dt << " exceeds the stability ceiling h/(2 d M1) = " << ceiling;
    throw StepSizeError(os.str());
  }

  const double t_min = *std::min_element(checkpoints.begin(), checkpoints.end());
  const auto n_steps = static_cast<std::size_t>(
      std::max(0.0, std::ceil((T - t_min) / dt - 1e-9)));
  const double step = n_steps == 0 ? dt : (T - t_min) / static_cast<double>(n_steps);
  auto time_of = [&](std::size_t k) {
    return k == n_steps ? t_min : T - static_cast<double>(k) * step;
  };

  SolveResult result;
  result.kind = kind;
  result.h = h;
  result.dt = step;
  result.boundary = options.boundary;
  result.scheme = options.scheme;
  result.requested = checkpoints;
  std::vector<bool> wanted(n_steps + 1, options.keep_all_steps);
  wanted[0] = true;
  for (double c : checkpoints) {
    auto k = n_steps == 0 ? 0
                          : static_cast<std::size_t>(std::ceil((T - c) / step - 1e-9));
    k = std::min(k, n_steps);
    wanted[k] = true;
    result.snapped.push_back(time_of(k));
  }

  ValueGrid current = terminal_grid(spec, domain);
  result.slices.push_back(current);

  const std::size_t n = domain.size();
  auto sweep = [&](std::span<const double> in, double t, std::span<double> out) {
    if (options.parallel)
      kernels::hamiltonian_sweep(spec, domain, in, t, kind, options.boundary, out);
    else
      kernels::hamiltonian_sweep_serial(spec, domain, in, t, kind, options.boundary, out);
  };

  // Growth detector. Stable monotone steps never raise the sup norm, so
  // |eta|_M <= |g|_inf / h always holds for them.
  double g_sup = 0.0;
  for (double v : current.values) g_sup = std::max(g_sup, std::abs(v));
  const double g_weighted = std::max(weighted_norm(current), g_sup / h);
  const double growth = 3.0 * static_cast<double>(spec.dim) * spec.drift_bound;

  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (std::size_t s = 1; s <= n_steps; ++s) {
    const double t = time_of(s - 1);
    std::vector<double>& eta = current.values;
    if (options.scheme == TimeScheme::euler) {
      sweep(eta, t, k1);
      for (std::size_t k = 0; k < n; ++k) eta[k] += step * k1[k];
    } else {
      const double half = 0.5 * step;
      sweep(eta, t, k1);
      for (std::size_t k = 0; k < n; ++k) tmp[k] = eta[k] + half * k1[k];
      sweep(tmp, t - half, k2);
      for (std::size_t k = 0; k < n; ++k) tmp[k] = eta[k] + half * k2[k];
      sweep(tmp, t - half, k3);
      for (std::size_t k = 0; k < n; ++k) tmp[k] = eta[k] + step * k3[k];
      sweep(tmp, t - step, k4);
      for (std::size_t k = 0; k < n; ++k)
        eta[k] += step / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    }
    current.t = time_of(s);
    const double norm = weighted_norm(current);
    const double bound =
        std::exp(growth * (T - current.t)) * g_weighted * (1.0 + options.growth_tolerance) +
        1e-14;
    if (!std::isfinite(norm) || norm > bound) {
      std::ostringstream os;
      os << "weighted norm " << norm << " at t = " << current.t << " exceeds growth bound "
         << bound << "; reduce dt";
      throw StepSizeError(os.str());
    }
    if (wanted[s]) result.slices.push_back(current);
  }
  return result;
}

double boundary_influence(const GameSpec& spec, const StateBox& x0_box, double t0,
                          double h, double pad, double dt, ValueKind kind,
                          const SolveOptions& options) {
  const auto narrow = truncate_domain(spec, x0_box, t0, h, pad);
  const auto wide = truncate_domain(spec, x0_box, t0, h, 2.0 * pad);
  const auto a = solve_backward(spec, narrow, dt, kind, {t0}, options);
  const auto b = solve_backward(spec, wide, dt, kind, {t0}, options);
  const auto region = truncate_domain(spec, x0_box, spec.horizon, h, 0.0);
  double worst = 0.0;
  for (std::size_t k = 0; k < region.size(); ++k) {
    const auto p = region.point(k);
    worst = std::max(worst, std::abs(a.checkpoint(t0).at(p) - b.checkpoint(t0).at(p)));
  }
  return worst;
}

void write_slice_csv(const std::string& path, const ValueGrid& grid,
                     const std::vector<std::string>& metadata) {
  auto out = open_csv(path, metadata);
  out << 't';
  for (std::size_t a = 0; a < grid.domain.dim(); ++a) out << ",x_" << a + 1;
  out << ",value\n";
  State xs(grid.domain.dim());
  const std::string t = format_double(grid.t);
  for (std::size_t k = 0; k < grid.values.size(); ++k) {
    grid.domain.state_into(k, xs);
    out << t;
    for (double c : xs) out << ',' << format_double(c);
    out << ',' << format_double(grid.values[k]) << '\n';
  }
}

}  // namespace dgame
