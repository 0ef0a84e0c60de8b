#include "dgame/extremal_shift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dgame/csv.hpp"
#include "dgame/errors.hpp"
#include "dgame/rng.hpp"

namespace dgame {

Partition Partition::uniform(double t0, double T, double max_diameter) {
  if (!(max_diameter > 0.0)) throw ConfigError("partition: diameter must be positive");
  if (!(T > t0)) throw ConfigError("partition: need t0 < T");
  const auto n = static_cast<std::size_t>(std::ceil((T - t0) / max_diameter - 1e-9));
  Partition p;
  for (std::size_t k = 0; k <= n; ++k)
    p.times.push_back(k == n ? T : t0 + (T - t0) * static_cast<double>(k) /
                                            static_cast<double>(n));
  return p;
}

double Partition::diameter() const {
  double d = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) d = std::max(d, times[k] - times[k - 1]);
  return d;
}

void Partition::validate(double T) const {
  if (times.size() < 2) throw ConfigError("partition: need at least two times");
  if (times.front() < 0.0) throw ConfigError("partition: starts before 0");
  if (times.back() != T) throw ConfigError("partition: must end at T");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw ConfigError("partition: not strictly increasing");
}

double varpi(const GameSpec& spec, double t, ConstVec z, ConstVec xi, ConstVec u,
             ConstVec v, Branch branch, double h) {
  State b;
  if (branch == Branch::one) {
    b.resize(spec.dim);
    spec.drift(t, z, u, v, b);
  } else {
    b = chain_characteristics(spec, t, xi, u, v, h).b2;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < spec.dim; ++i) s += (z[i] - xi[i]) * b[i];
  return s;
}

namespace {

std::vector<double> varpi_table(const GameSpec& spec, double t, ConstVec z, ConstVec xi,
                                Branch branch, double h) {
  const std::size_t nu = spec.u_grid.size(), nv = spec.v_grid.size();
  std::vector<double> table(nu * nv);
  for (std::size_t i = 0; i < nu; ++i)
    for (std::size_t j = 0; j < nv; ++j)
      table[i * nv + j] = varpi(spec, t, z, xi, spec.u_grid[i], spec.v_grid[j], branch, h);
  return table;
}

}  // namespace

std::size_t select_u(const GameSpec& spec, double t, ConstVec z, ConstVec xi,
                     Branch branch, double h) {
  const auto table = varpi_table(spec, t, z, xi, branch, h);
  const std::size_t nu = spec.u_grid.size(), nv = spec.v_grid.size();
  std::size_t arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nu; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nv; ++j) m = std::max(m, table[i * nv + j]);
    if (m < best) {
      best = m;
      arg = i;
    }
  }
  return arg;
}

std::size_t select_v(const GameSpec& spec, double t, ConstVec z, ConstVec xi,
                     Branch branch, double h) {
  const auto table = varpi_table(spec, t, z, xi, branch, h);
  const std::size_t nu = spec.u_grid.size(), nv = spec.v_grid.size();
  std::size_t arg = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < nv; ++j) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nu; ++i) m = std::min(m, table[i * nv + j]);
    if (m > best) {
      best = m;
      arg = j;
    }
  }
  return arg;
}

std::size_t model_feedback(const SolveResult& eta, const GameSpec& spec, double t,
                           ConstPoint y) {
  const ValueGrid& slice = eta.slice_at_or_below(t);
  if (!slice.domain.contains(y))
    throw TruncationError("model_feedback: chain state outside the solved box");
  return upper_argmin(slice, spec, t, y, eta.boundary);
}

// ---- adversaries ----------------------------------------------------------

namespace {

class ConstantAdversary final : public Adversary {
 public:
  explicit ConstantAdversary(std::size_t index) : index_(index) {}
  std::string name() const override { return "constant:" + std::to_string(index_); }
  std::size_t choose(const GameSpec&, const AdversaryContext&) const override {
    return index_;
  }

 private:
  std::size_t index_;
};

class BangBangAdversary final : public Adversary {
 public:
  std::string name() const override { return "bang-bang"; }
  std::size_t choose(const GameSpec& spec, const AdversaryContext& ctx) const override {
    State f(spec.dim);
    std::size_t arg = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < spec.v_grid.size(); ++j) {
      drift_at(spec, ctx.t, ctx.x, ctx.u_index, j, f);
      double s = 0.0;
      for (std::size_t i = 0; i < spec.dim; ++i) s += chi(ctx.x[i]) * f[i];
      if (s > best) {
        best = s;
        arg = j;
      }
    }
    return arg;
  }
};

class RandomAdversary final : public Adversary {
 public:
  explicit RandomAdversary(double interval) : interval_(interval) {}
  std::string name() const override { return "random"; }
  std::size_t choose(const GameSpec& spec, const AdversaryContext& ctx) const override {
    const auto slot = static_cast<std::uint64_t>(std::floor(ctx.t / interval_ + 1e-9));
    Rng rng(derive_seed(ctx.replica_seed, slot));
    return rng.index(spec.v_grid.size());
  }

 private:
  double interval_;
};

class ShiftAdversary final : public Adversary {
 public:
  ShiftAdversary(Branch branch, double h) : branch_(branch), h_(h) {}
  std::string name() const override { return "shift"; }
  std::size_t choose(const GameSpec& spec, const AdversaryContext& ctx) const override {
    return select_v(spec, ctx.t_l, ctx.x_l, ctx.y_l, branch_, h_);
  }

 private:
  Branch branch_;
  double h_;
};

}  // namespace

std::unique_ptr<Adversary> make_constant_adversary(std::size_t index) {
  return std::make_unique<ConstantAdversary>(index);
}
std::unique_ptr<Adversary> make_bang_bang_adversary() {
  return std::make_unique<BangBangAdversary>();
}
std::unique_ptr<Adversary> make_random_adversary(double switch_interval) {
  if (!(switch_interval > 0.0)) throw ConfigError("random adversary: interval must be > 0");
  return std::make_unique<RandomAdversary>(switch_interval);
}
std::unique_ptr<Adversary> make_shift_adversary(Branch branch, double h) {
  return std::make_unique<ShiftAdversary>(branch, h);
}

std::unique_ptr<Adversary> make_adversary(std::string_view name, const GameSpec& spec,
                                          double h) {
  if (name == "bang-bang") return make_bang_bang_adversary();
  if (name == "random") return make_random_adversary(0.05 * spec.horizon);
  if (name == "shift") return make_shift_adversary(Branch::one, h);
  if (name == "constant") return make_constant_adversary(spec.v_grid.size() - 1);
  if (name.starts_with("constant:")) {
    std::size_t idx = 0;
    try {
      idx = std::stoul(std::string(name.substr(9)));
    } catch (const std::exception&) {
      throw ConfigError("bad adversary '" + std::string(name) + "'");
    }
    if (idx >= spec.v_grid.size()) throw ConfigError("constant adversary: index out of range");
    return make_constant_adversary(idx);
  }
  throw ConfigError("unknown adversary '" + std::string(name) +
                    "' (constant[:i] | bang-bang | random | shift)");
}

std::vector<std::unique_ptr<Adversary>> default_panel(const GameSpec& spec, double h) {
  std::vector<std::unique_ptr<Adversary>> panel;
  for (const char* n : {"constant", "bang-bang", "random", "shift"})
    panel.push_back(make_adversary(n, spec, h));
  return panel;
}

// ---- coupled run ----------------------------------------------------------

namespace {

void rk4_step(const GameSpec& spec, double t, double dt, State& x, std::size_t ui,
              std::size_t vi, State& k1, State& k2, State& k3, State& k4, State& tmp) {
  const std::size_t d = x.size();
  drift_at(spec, t, x, ui, vi, k1);
  for (std::size_t a = 0; a < d; ++a) tmp[a] = x[a] + 0.5 * dt * k1[a];
  drift_at(spec, t + 0.5 * dt, tmp, ui, vi, k2);
  for (std::size_t a = 0; a < d; ++a) tmp[a] = x[a] + 0.5 * dt * k2[a];
  drift_at(spec, t + 0.5 * dt, tmp, ui, vi, k3);
  for (std::size_t a = 0; a < d; ++a) tmp[a] = x[a] + dt * k3[a];
  drift_at(spec, t + dt, tmp, ui, vi, k4);
  for (std::size_t a = 0; a < d; ++a)
    x[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
}

struct Jump {
  double t;
  std::size_t axis;
  int dir;
};

}  // namespace

PairedTrajectory run_extremal_shift(const GameSpec& spec, const Partition& partition,
                                    ConstVec x0, const SolveResult& eta,
                                    const Adversary& adversary, double h,
                                    std::uint64_t rng_seed, const ShiftOptions& options) {
  partition.validate(spec.horizon);
  if (x0.size() != spec.dim) throw InvalidSpecError("run_extremal_shift: x0 dimension");
  if (!(h > 0.0)) throw InvalidSpecError("run_extremal_shift: h must be positive");
  const std::size_t d = spec.dim;
  const double T = spec.horizon;
  const double substep =
      options.ode_step > 0.0 ? options.ode_step
                             : std::min(partition.diameter() / 4.0, 1e-3 * T);
  const double majorant = static_cast<double>(d) * spec.drift_bound / h;

  Rng chain_rng(derive_seed(rng_seed, 0));
  const std::uint64_t adversary_seed = derive_seed(rng_seed, 1);

  PairedTrajectory out;
  out.partition_times = partition.times;
  State x(x0.begin(), x0.end());
  LatticePoint y = nearest_lattice_point(x0, h);
  State ys = lattice_state(y, h);
  if (!eta.slices.front().domain.contains(y))
    throw TruncationError("run_extremal_shift: x0 outside the solved box");

  State f(d), k1(d), k2(d), k3(d), k4(d), tmp(d);
  std::vector<Jump> jumps;
  std::vector<double> breaks;
  const std::size_t r = partition.times.size() - 1;
  for (std::size_t l = 0; l < r; ++l) {
    const double tl = partition.times[l];
    const double tn = partition.times[l + 1];
    out.x_at_partition.push_back(x);
    out.y_at_partition.push_back(ys);
    const State xl = x;
    const State yl = ys;
    const std::size_t ul = select_u(spec, tl, xl, yl, options.branch, h);
    const std::size_t vl = select_v(spec, tl, xl, yl, options.branch, h);
    out.u_log.push_back(ul);
    out.v_model_log.push_back(vl);

    // Model chain on [tl, tn): thinning against the majorant.
    jumps.clear();
    {
      LatticePoint yc = y;
      State yc_state = ys;
      double t = tl;
      while (majorant > 0.0) {
        t += chain_rng.exponential(majorant);
        if (t >= tn) break;
        const std::size_t ustar = model_feedback(eta, spec, t, yc);
        drift_at(spec, t, yc_state, ustar, vl, f);
        double total = 0.0;
        for_each_jump(f, h, [&](std::size_t, int, double rate) { total += rate; });
        if (total > majorant * (1.0 + 1e-12))
          throw InvalidSpecError("run_extremal_shift: rate exceeds d M1 / h (M1 too small)");
        const double pick = chain_rng.uniform() * majorant;
        if (pick >= total) continue;
        double acc = 0.0;
        Jump jmp{t, 0, 0};
        for_each_jump(f, h, [&](std::size_t i, int s, double rate) {
          if (jmp.dir != 0) return;
          acc += rate;
          if (pick < acc) jmp = {t, i, s};
        });
        if (jmp.dir == 0)
          for_each_jump(f, h, [&](std::size_t i, int s, double) { jmp = {t, i, s}; });
        yc[jmp.axis] += jmp.dir;
        yc_state[jmp.axis] = h * static_cast<double>(yc[jmp.axis]);
        if (!eta.slices.front().domain.contains(yc)) {
          std::ostringstream os;
          os << "run_extremal_shift: model chain left the solved box at t = " << t
             << " (increase the box padding)";
          throw TruncationError(os.str());
        }
        jumps.push_back(jmp);
      }
    }

    // Original system on [tl, tn), with break points at substeps and jumps.
    const auto n_sub = static_cast<std::size_t>(std::ceil((tn - tl) / substep - 1e-9));
    breaks.clear();
    for (std::size_t k = 1; k < n_sub; ++k)
      breaks.push_back(tl + (tn - tl) * static_cast<double>(k) / static_cast<double>(n_sub));
    for (const auto& j : jumps) breaks.push_back(j.t);
    breaks.push_back(tn);
    std::sort(breaks.begin(), breaks.end());

    double t = tl;
    std::size_t next_jump = 0;
    bool first = true;
    for (double b : breaks) {
      AdversaryContext ctx{t, x, ys, ul, tl, xl, yl, adversary_seed};
      const std::size_t vadv = adversary.choose(spec, ctx);
      if (first) {
        out.v_log.push_back(vadv);
        if (options.record_events)
          out.events.push_back({tl, x, ys, ul, vadv, EventKind::partition});
        first = false;
      }
      if (b > t) rk4_step(spec, t, b - t, x, ul, vadv, k1, k2, k3, k4, tmp);
      t = b;
      while (next_jump < jumps.size() && jumps[next_jump].t <= t) {
        const Jump& j = jumps[next_jump++];
        y[j.axis] += j.dir;
        ys[j.axis] = h * static_cast<double>(y[j.axis]);
        ++out.jump_count;
        if (options.record_events)
          out.events.push_back({j.t, x, ys, ul, vadv, EventKind::jump});
      }
    }
  }
  out.x_at_partition.push_back(x);
  out.y_at_partition.push_back(ys);
  if (options.record_events)
    out.events.push_back({T, x, ys, out.u_log.back(), out.v_log.back(), EventKind::partition});
  out.outcome = eval_payoff(spec, x);
  out.model_outcome = eval_payoff(spec, ys);
  return out;
}

PanelResult run_extremal_panel(const GameSpec& spec, const Partition& partition,
                               ConstVec x0, const SolveResult& eta,
                               const Adversary& adversary, double h, std::size_t n,
                               std::uint64_t rng_seed, const ShiftOptions& options) {
  if (n < 2) throw ConfigError("run_extremal_panel: need at least two replicas");
  const std::size_t m = partition.times.size();
  PanelResult res;
  res.adversary = adversary.name();
  res.partition_times = partition.times;
  res.outcomes.assign(n, 0.0);
  res.model_outcomes.assign(n, 0.0);
  res.coupling_sq.assign(n * m, 0.0);
  ShiftOptions opts = options;
  opts.record_events = false;

  std::int64_t failed = -1;
  std::string message;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      auto traj = run_extremal_shift(spec, partition, x0, eta, adversary, h,
                                     derive_seed(rng_seed, idx), opts);
      res.outcomes[idx] = traj.outcome;
      res.model_outcomes[idx] = traj.model_outcome;
      for (std::size_t l = 0; l < m; ++l) {
        double s = 0.0;
        for (std::size_t a = 0; a < spec.dim; ++a) {
          const double dlt = traj.x_at_partition[l][a] - traj.y_at_partition[l][a];
          s += dlt * dlt;
        }
        res.coupling_sq[idx * m + l] = s;
      }
    } catch (const std::exception& e) {
#pragma omp critical(dgame_panel_fail)
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
  res.outcome = summarize(res.outcomes);
  res.model_outcome = summarize(res.model_outcomes);
  return res;
}

CouplingReport coupling_check(const PanelResult& panel, double beta, double theta) {
  const std::size_t m = panel.partition_times.size();
  const std::size_t n = panel.outcomes.size();
  CouplingReport rep;
  std::vector<double> col(n);
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t i = 0; i < n; ++i) col[i] = panel.coupling_sq[i * m + l];
    rep.mean_sq.push_back(summarize(col).mean);
  }
  for (std::size_t l = 0; l + 1 < m; ++l) {
    const double dl = panel.partition_times[l + 1] - panel.partition_times[l];
    for (std::size_t i = 0; i < n; ++i)
      col[i] = panel.coupling_sq[i * m + l + 1] - panel.coupling_sq[i * m + l] * (1.0 + beta * dl);
    const auto e = summarize(col);
    const double excess = e.mean - theta * dl;
    rep.residual.push_back(excess);
    rep.fitted_slack = std::max(rep.fitted_slack, (excess - 3.0 * e.std_error) / dl);
  }
  return rep;
}

void write_trajectory_csv(const std::string& path, const PairedTrajectory& traj,
                          const std::vector<std::string>& metadata) {
  auto out = open_csv(path, metadata);
  const std::size_t d = traj.x_at_partition.front().size();
  out << "t";
  for (std::size_t a = 0; a < d; ++a) out << ",x_" << a + 1;
  for (std::size_t a = 0; a < d; ++a) out << ",y_" << a + 1;
  out << ",u_index,v_index\n";
  for (const auto& e : traj.events) {
    out << format_double(e.t);
    for (double c : e.x) out << ',' << format_double(c);
    for (double c : e.y) out << ',' << format_double(c);
    out << ',' << e.u_index << ',' << e.v_index << '\n';
  }
}

void write_replica_csv(const std::string& path, const PanelResult& panel,
                       const std::vector<std::string>& metadata) {
  auto out = open_csv(path, metadata);
  out << "replica,outcome,model_outcome\n";
  for (std::size_t i = 0; i < panel.outcomes.size(); ++i)
    out << i << ',' << format_double(panel.outcomes[i]) << ','
        << format_double(panel.model_outcomes[i]) << '\n';
}

}  // namespace dgame
