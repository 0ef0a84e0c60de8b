#include "dgame/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dgame/errors.hpp"

namespace dgame::kernels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Generator of the lattice chain at dense index k for one control pair.
/// Returns false if a jump leaves the box under the strict policy.
bool flat_generator(const GameSpec& spec, const LatticeDomain& dom,
                    std::span<const double> in, std::size_t k, ConstVec xs, double t,
                    std::size_t ui, std::size_t vi, BoundaryPolicy policy,
                    std::span<double> f, double& result) {
  drift_at(spec, t, xs, ui, vi, f);
  const double h = dom.mesh();
  const double here = in[k];
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = std::abs(f[i]);
    if (a < kRateFloor) continue;
    const int dir = chi(f[i]);
    const std::int64_t c = dom.coord(k, i);
    if ((dir > 0 && c == dom.hi()[i]) || (dir < 0 && c == dom.lo()[i])) {
      if (policy == BoundaryPolicy::strict) return false;
      continue;  // frozen target: value(target) = value(x)
    }
    const std::size_t nb = dir > 0 ? k + dom.stride(i) : k - dom.stride(i);
    sum += (a / h) * (in[nb] - here);
  }
  result = sum;
  return true;
}

template <class Gen>
double minimax(const GameSpec& spec, ValueKind kind, Gen&& gen) {
  const std::size_t nu = spec.u_grid.size();
  const std::size_t nv = spec.v_grid.size();
  if (kind == ValueKind::upper) {
    double best = kInf;
    for (std::size_t ui = 0; ui < nu; ++ui) {
      double m = -kInf;
      for (std::size_t vi = 0; vi < nv; ++vi) m = std::max(m, gen(ui, vi));
      best = std::min(best, m);
    }
    return best;
  }
  double best = -kInf;
  for (std::size_t vi = 0; vi < nv; ++vi) {
    double m = kInf;
    for (std::size_t ui = 0; ui < nu; ++ui) m = std::min(m, gen(ui, vi));
    best = std::max(best, m);
  }
  return best;
}

[[noreturn]] void throw_truncated(const LatticeDomain& dom, std::size_t k) {
  std::ostringstream os;
  os << "jump target leaves the lattice box from point (";
  auto p = dom.point(k);
  for (std::size_t a = 0; a < p.size(); ++a) os << (a ? ", " : "") << p[a];
  os << ") under strict boundary policy";
  throw TruncationError(os.str());
}

}  // namespace

void hamiltonian_sweep(const GameSpec& spec, const LatticeDomain& domain,
                       std::span<const double> in, double t, ValueKind kind,
                       BoundaryPolicy policy, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(domain.size());
  std::int64_t bad = -1;
#pragma omp parallel
  {
    State xs(domain.dim());
    State f(domain.dim());
#pragma omp for schedule(static)
    for (std::int64_t kk = 0; kk < n; ++kk) {
      const auto k = static_cast<std::size_t>(kk);
      domain.state_into(k, xs);
      bool ok = true;
      out[k] = minimax(spec, kind, [&](std::size_t ui, std::size_t vi) {
        double g = 0.0;
        if (!flat_generator(spec, domain, in, k, xs, t, ui, vi, policy, f, g)) ok = false;
        return g;
      });
      if (!ok) {
#pragma omp critical(dgame_sweep_bad)
        if (bad < 0 || kk < bad) bad = kk;
      }
    }
  }
  if (bad >= 0) throw_truncated(domain, static_cast<std::size_t>(bad));
}

void hamiltonian_sweep_serial(const GameSpec& spec, const LatticeDomain& domain,
                              std::span<const double> in, double t, ValueKind kind,
                              BoundaryPolicy policy, std::span<double> out) {
  const double h = domain.mesh();
  LatticeFunction phi = [&](ConstPoint p) -> double {
    if (auto k = domain.index_of(p)) return in[*k];
    if (policy == BoundaryPolicy::strict)
      throw TruncationError("jump target leaves the lattice box under strict boundary policy");
    LatticePoint q(p.begin(), p.end());
    for (std::size_t a = 0; a < q.size(); ++a)
      q[a] = std::clamp(q[a], domain.lo()[a], domain.hi()[a]);
    return in[*domain.index_of(q)];
  };
  for (std::size_t k = 0; k < domain.size(); ++k) {
    const LatticePoint x = domain.point(k);
    out[k] = minimax(spec, kind, [&](std::size_t ui, std::size_t vi) {
      return apply_generator(phi, spec, t, x, spec.u_grid[ui], spec.v_grid[vi], h);
    });
  }
}

void viscous_step(const GameSpec& spec, const LatticeDomain& domain,
                  std::span<const double> in, std::span<const double> boundary_values,
                  double t, double sigma, double dt, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(domain.size());
  const double dx = domain.mesh();
  const double diff = 0.5 * sigma * sigma / (dx * dx);
#pragma omp parallel
  {
    State xs(domain.dim());
    State f(domain.dim());
#pragma omp for schedule(static)
    for (std::int64_t kk = 0; kk < n; ++kk) {
      const auto k = static_cast<std::size_t>(kk);
      if (domain.on_boundary(k)) {
        out[k] = boundary_values[k];
        continue;
      }
      domain.state_into(k, xs);
      const double here = in[k];
      const double adv = minimax(spec, ValueKind::upper, [&](std::size_t ui, std::size_t vi) {
        drift_at(spec, t, xs, ui, vi, f);
        double s = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
          const double a = std::abs(f[i]);
          if (a < kRateFloor) continue;
          const std::size_t nb = f[i] > 0 ? k + domain.stride(i) : k - domain.stride(i);
          s += (a / dx) * (in[nb] - here);
        }
        return s;
      });
      double lap = 0.0;
      for (std::size_t i = 0; i < domain.dim(); ++i)
        lap += in[k + domain.stride(i)] - 2.0 * here + in[k - domain.stride(i)];
      out[k] = here + dt * (adv + diff * lap);
    }
  }
}

void viscous_step_serial(const GameSpec& spec, const LatticeDomain& domain,
                         std::span<const double> in,
                         std::span<const double> boundary_values, double t,
                         double sigma, double dt, std::span<double> out) {
  const double dx = domain.mesh();
  auto value = [&](ConstPoint p) { return in[*domain.index_of(p)]; };
  for (std::size_t k = 0; k < domain.size(); ++k) {
    if (domain.on_boundary(k)) {
      out[k] = boundary_values[k];
      continue;
    }
    const LatticePoint x = domain.point(k);
    const double adv = minimax(spec, ValueKind::upper, [&](std::size_t ui, std::size_t vi) {
      return apply_generator(value, spec, t, x, spec.u_grid[ui], spec.v_grid[vi], dx);
    });
    double lap = 0.0;
    LatticePoint y = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      y[i] = x[i] + 1;
      const double up = value(y);
      y[i] = x[i] - 1;
      const double down = value(y);
      y[i] = x[i];
      lap += up - 2.0 * in[k] + down;
    }
    out[k] = in[k] + dt * (adv + 0.5 * sigma * sigma / (dx * dx) * lap);
  }
}

}  // namespace dgame::kernels
