#include "dgame/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "dgame/csv.hpp"
#include "dgame/errors.hpp"
#include "dgame/rng.hpp"

namespace dgame {

ControlPolicy constant_policy(std::size_t index) {
  return [index](double, ConstVec) { return index; };
}

State OdeTrajectory::at(double t) const {
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - times.begin());
  const double w = (t - times[j - 1]) / (times[j] - times[j - 1]);
  State out(states[j].size());
  for (std::size_t a = 0; a < out.size(); ++a)
    out[a] = (1.0 - w) * states[j - 1][a] + w * states[j][a];
  return out;
}

OdeTrajectory integrate_ode(const GameSpec& spec, const ControlPolicy& u_policy,
                            const ControlPolicy& v_policy, ConstVec x0, double t0,
                            double step) {
  const double T = spec.horizon;
  if (x0.size() != spec.dim) throw InvalidSpecError("integrate_ode: x0 has wrong dimension");
  if (t0 < 0.0 || t0 > T) throw ConfigError("integrate_ode: t0 outside [0, T]");
  OdeTrajectory traj;
  traj.times.push_back(t0);
  traj.states.emplace_back(x0.begin(), x0.end());
  if (t0 == T) return traj;
  if (step <= 0.0) step = std::min(1e-3 * T, T - t0);
  const auto n = static_cast<std::size_t>(std::ceil((T - t0) / step - 1e-9));
  const double dt = (T - t0) / static_cast<double>(n);
  const std::size_t d = spec.dim;
  State x(x0.begin(), x0.end()), k1(d), k2(d), k3(d), k4(d), tmp(d);
  for (std::size_t s = 0; s < n; ++s) {
    const double t = t0 + static_cast<double>(s) * dt;
    std::size_t ui = 0, vi = 0;
    try {
      ui = u_policy(t, x);
      vi = v_policy(t, x);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "integrate_ode: policy failed at t = " << t << ": " << e.what();
      throw Error(os.str());
    }
    drift_at(spec, t, x, ui, vi, k1);
    for (std::size_t a = 0; a < d; ++a) tmp[a] = x[a] + 0.5 * dt * k1[a];
    drift_at(spec, t + 0.5 * dt, tmp, ui, vi, k2);
    for (std::size_t a = 0; a < d; ++a) tmp[a] = x[a] + 0.5 * dt * k2[a];
    drift_at(spec, t + 0.5 * dt, tmp, ui, vi, k3);
    for (std::size_t a = 0; a < d; ++a) tmp[a] = x[a] + dt * k3[a];
    drift_at(spec, t + dt, tmp, ui, vi, k4);
    for (std::size_t a = 0; a < d; ++a)
      x[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
    traj.times.push_back(s + 1 == n ? T : t0 + static_cast<double>(s + 1) * dt);
    traj.states.push_back(x);
  }
  return traj;
}

const ChainSegment& ChainPath::segment_at(double t) const {
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double v, const ChainSegment& s) { return v < s.t; });
  if (it == segments.begin()) return segments.front();
  return *(it - 1);
}

State ChainPath::state_at(double t) const { return lattice_state(segment_at(t).y, h); }

ChainPath simulate_chain(const GameSpec& spec, const ControlPolicy& u_policy,
                         const ControlPolicy& v_policy, ConstPoint xi0, double h,
                         double t0, std::uint64_t rng_seed, const ChainOptions& options) {
  if (!(h > 0.0)) throw InvalidSpecError("simulate_chain: h must be positive");
  if (xi0.size() != spec.dim) throw InvalidSpecError("simulate_chain: xi0 has wrong dimension");
  const double T = spec.horizon;
  Rng rng(rng_seed);
  ChainPath path;
  path.h = h;
  path.t0 = t0;
  path.t_end = T;

  LatticePoint y(xi0.begin(), xi0.end());
  State ys = lattice_state(y, h);
  State f(spec.dim);
  auto controls = [&](double t) {
    return std::pair{u_policy(t, ys), v_policy(t, ys)};
  };
  std::size_t ui = 0, vi = 0;
  std::tie(ui, vi) = controls(t0);
  path.segments.push_back({t0, y, ui, vi});

  std::vector<double> corrections;
  for (double c : options.correction_times)
    if (c > t0 && c < T) corrections.push_back(c);
  std::sort(corrections.begin(), corrections.end());
  std::size_t next_corr = 0;

  const double majorant =
      static_cast<double>(spec.dim) * spec.drift_bound / h;
  double t = t0;
  while (t < T) {
    const double barrier = next_corr < corrections.size() ? corrections[next_corr] : T;
    const double tau = majorant > 0.0 ? t + rng.exponential(majorant)
                                      : std::numeric_limits<double>::infinity();
    if (tau >= barrier) {
      t = barrier;
      if (t >= T) break;
      ++next_corr;
      std::tie(ui, vi) = controls(t);
      const auto& last = path.segments.back();
      if (ui != last.u_index || vi != last.v_index) path.segments.push_back({t, y, ui, vi});
      continue;
    }
    t = tau;
    std::tie(ui, vi) = controls(t);
    drift_at(spec, t, ys, ui, vi, f);
    double total = 0.0;
    for_each_jump(f, h, [&](std::size_t, int, double rate) { total += rate; });
    if (total > majorant * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "simulate_chain: total rate " << total << " exceeds the majorant d M1 / h = "
         << majorant << " (declared M1 too small)";
      throw InvalidSpecError(os.str());
    }
    const double pick = rng.uniform() * majorant;
    if (pick < total) {
      double acc = 0.0;
      std::size_t axis = 0;
      int dir = 0;
      for_each_jump(f, h, [&](std::size_t i, int s, double rate) {
        if (dir != 0) return;
        acc += rate;
        if (pick < acc) {
          axis = i;
          dir = s;
        }
      });
      if (dir == 0) {  // rounding at the top of the cumulative sum
        for_each_jump(f, h, [&](std::size_t i, int s, double) {
          axis = i;
          dir = s;
        });
      }
      y[axis] += dir;
      ys[axis] = h * static_cast<double>(y[axis]);
      ++path.jump_count;
      std::tie(ui, vi) = controls(t);
      path.segments.push_back({t, y, ui, vi});
    } else {
      const auto& last = path.segments.back();
      if (ui != last.u_index || vi != last.v_index) path.segments.push_back({t, y, ui, vi});
    }
  }
  return path;
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

OutcomeEstimate summarize(std::span<const double> samples) {
  if (samples.size() < 2) throw ConfigError("summarize: need at least two samples");
  const double n = static_cast<double>(samples.size());
  OutcomeEstimate e;
  e.n = samples.size();
  e.mean = pairwise_sum(samples) / n;
  std::vector<double> sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double d = samples[i] - e.mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / (n - 1.0);
  e.std_error = std::sqrt(var / n);
  e.ci95 = {e.mean - 1.96 * e.std_error, e.mean + 1.96 * e.std_error};
  return e;
}

OutcomeEstimate monte_carlo_outcome(const Replica& run, std::size_t n,
                                    std::uint64_t rng_seed, std::vector<double>* outcomes) {
  if (n < 2) throw ConfigError("monte_carlo_outcome: need n >= 2 replicas");
  std::vector<double> values(n);
  std::int64_t failed = -1;
  std::string message;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      values[idx] = run(derive_seed(rng_seed, idx), idx);
    } catch (const std::exception& e) {
#pragma omp critical(dgame_mc_fail)
      if (failed < 0 || i < failed) {
        failed = i;
        message = e.what();
      }
    }
  }
  if (failed >= 0) {
    std::ostringstream os;
    os << "replica " << failed << " failed: " << message;
    throw Error(os.str());
  }
  OutcomeEstimate e = summarize(values);
  if (outcomes) *outcomes = std::move(values);
  return e;
}

namespace {

double sq_dist(ConstVec a, ConstVec b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

MomentReport moment_growth_check(std::span<const OdeTrajectory> paths, double s,
                                 double t, const GameSpec& spec) {
  if (t < s) throw ConfigError("moment_growth_check: need s <= t");
  MomentReport r;
  r.bound = spec.drift_bound * spec.drift_bound * (t - s) * (t - s);
  std::vector<double> d2;
  for (const auto& p : paths) {
    const double v = sq_dist(p.at(t), p.at(s));
    d2.push_back(v);
    if (v > r.bound * (1.0 + 1e-12) + 1e-15) r.within = false;
  }
  if (d2.size() >= 2) {
    auto e = summarize(d2);
    r.empirical = e.mean;
    r.std_error = e.std_error;
  } else if (!d2.empty()) {
    r.empirical = d2.front();
  }
  return r;
}

MomentReport moment_growth_check(std::span<const ChainPath> paths, double s, double t,
                                 double m0_2) {
  if (t < s) throw ConfigError("moment_growth_check: need s <= t");
  MomentReport r;
  r.bound = m0_2 * (t - s);
  if (t == s) return r;
  std::vector<double> d2;
  for (const auto& p : paths) d2.push_back(sq_dist(p.state_at(t), p.state_at(s)));
  if (d2.size() < 2) throw ConfigError("moment_growth_check: need at least two paths");
  auto e = summarize(d2);
  r.empirical = e.mean;
  r.std_error = e.std_error;
  const double excess = e.mean - 3.0 * e.std_error - r.bound;
  r.fitted_slack = std::max(0.0, excess) / (t - s);
  r.within = excess <= 0.0;
  return r;
}

bool ResidualReport::all_contain_zero() const {
  return std::all_of(ci_contains_zero.begin(), ci_contains_zero.end(),
                     [](bool b) { return b; });
}

ResidualReport martingale_residual(std::span<const ChainPath> paths, const GameSpec& spec,
                                   TestFunction phi_kind, ConstVec a,
                                   const std::vector<double>& checkpoints) {
  if (paths.size() < 2) throw ConfigError("martingale_residual: need at least two paths");
  if (a.size() != spec.dim) throw InvalidSpecError("martingale_residual: a has wrong dimension");
  const double h = paths.front().h;
  const State av(a.begin(), a.end());
  LatticeFunction phi = [&](ConstPoint p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double x = h * static_cast<double>(p[i]);
      s += phi_kind == TestFunction::linear ? av[i] * x : (x - av[i]) * (x - av[i]);
    }
    return s;
  };

  ResidualReport rep;
  rep.test_function = phi_kind;
  rep.checkpoints = checkpoints;
  std::vector<std::vector<double>> per_cp(checkpoints.size(),
                                          std::vector<double>(paths.size()));
  for (std::size_t pi = 0; pi < paths.size(); ++pi) {
    const ChainPath& p = paths[pi];
    std::vector<double> gen(p.segments.size());
    for (std::size_t j = 0; j < p.segments.size(); ++j) {
      const auto& sg = p.segments[j];
      gen[j] = apply_generator(phi, spec, sg.t, sg.y, spec.u_grid[sg.u_index],
                               spec.v_grid[sg.v_index], h);
    }
    const double phi0 = phi(p.segments.front().y);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      const double tc = checkpoints[c];
      double integral = 0.0;
      for (std::size_t j = 0; j < p.segments.size(); ++j) {
        const double lo = p.segments[j].t;
        if (lo >= tc) break;
        const double hi = j + 1 < p.segments.size() ? p.segments[j + 1].t : p.t_end;
        integral += (std::min(hi, tc) - lo) * gen[j];
      }
      per_cp[c][pi] = phi(p.segment_at(tc).y) - phi0 - integral;
    }
  }
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    auto e = summarize(per_cp[c]);
    rep.means.push_back(e.mean);
    rep.std_errors.push_back(e.std_error);
    rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(e.mean));
    const double tol = std::max(3.0 * e.std_error, 1e-12);
    rep.ci_contains_zero.push_back(std::abs(e.mean) <= tol);
  }
  return rep;
}

void write_chain_csv(const std::string& path, const ChainPath& chain,
                     const std::vector<std::string>& metadata) {
  auto out = open_csv(path, metadata);
  out << 't';
  for (std::size_t a = 0; a < chain.segments.front().y.size(); ++a) out << ",y_" << a + 1;
  out << ",u_index,v_index\n";
  for (const auto& s : chain.segments) {
    out << format_double(s.t);
    for (auto c : s.y) out << ',' << format_double(chain.h * static_cast<double>(c));
    out << ',' << s.u_index << ',' << s.v_index << '\n';
  }
}

}  // namespace dgame
