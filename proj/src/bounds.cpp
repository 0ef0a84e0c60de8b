#include "dgame/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dgame/csv.hpp"
#include "dgame/errors.hpp"
#include "dgame/lattice.hpp"
#include "dgame/rng.hpp"

namespace dgame {

double kappa_sampled(const GameSpec& spec, const ModelDriftFn& model, std::size_t n_samples,
                     std::uint64_t rng_seed, double radius) {
  Rng rng(rng_seed);
  const std::size_t d = spec.dim;
  State x(d), f(d), b(d);
  double worst = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double t = rng.uniform(0.0, spec.horizon);
    for (auto& c : x) c = rng.uniform(-radius, radius);
    const std::size_t ui = rng.index(spec.u_grid.size());
    const std::size_t vi = rng.index(spec.v_grid.size());
    drift_at(spec, t, x, ui, vi, f);
    model(t, x, spec.u_grid[ui], spec.v_grid[vi], b);
    double q = 0.0;
    for (std::size_t i = 0; i < d; ++i) q += (f[i] - b[i]) * (f[i] - b[i]);
    worst = std::max(worst, q);
  }
  return worst;
}

double kappa(const GameSpec& spec, double h, std::size_t n_samples, std::uint64_t rng_seed) {
  if (h < 1.0) return 0.0;
  ModelDriftFn chain = [&](double t, ConstVec x, ConstVec u, ConstVec v, std::span<double> out) {
    const auto ch = chain_characteristics(spec, t, x, u, v, h);
    std::copy(ch.b2.begin(), ch.b2.end(), out.begin());
  };
  return kappa_sampled(spec, chain, n_samples, rng_seed);
}

double beta(double lipschitz) { return 2.0 + 2.0 * lipschitz; }

double beta(const GameSpec& spec, Branch) { return beta(spec.drift_lipschitz); }

double c_constant(double horizon, double b) { return std::sqrt(horizon * std::exp(b * horizon)); }

BoundsReport assemble(const GameSpec& spec, double h, double sigma, std::size_t n_samples,
                      std::uint64_t rng_seed, bool allow_coarse) {
  validate_structure(spec);
  if (!(h > 0.0)) throw InvalidSpecError("bounds: h must be positive");
  if (h >= 1.0 && !allow_coarse)
    throw InvalidSpecError("bounds: h must be below 1 (jumps would leave the unit ball)");
  if (sigma < 0.0) throw InvalidSpecError("bounds: sigma must be nonnegative");

  BoundsReport r;
  r.h = h;
  r.sigma = sigma;
  r.horizon = spec.horizon;
  r.dim = spec.dim;
  const double d = static_cast<double>(spec.dim);
  const double m1 = spec.drift_bound;
  r.kappa = kappa(spec, h, n_samples, rng_seed);
  r.m0_1 = 0.0;  // the original system is deterministic
  r.m0_2 = std::pow(d, 1.5) * m1 * h;
  r.theta = r.kappa + r.m0_1 + r.m0_2;
  r.beta = beta(spec, Branch::one);
  r.c = c_constant(spec.horizon, r.beta);
  r.c1 = r.c * std::sqrt(d);
  r.c2 = std::pow(d, 0.75) * std::sqrt(m1) * r.c;
  const double R = spec.payoff_lipschitz;
  r.guarantee_thm1 = R * r.c * std::sqrt(r.theta);
  r.bound_thm2 = R * r.c2 * std::sqrt(h);
  r.bound_visc = R * r.c1 * sigma;

  Rng rng(derive_seed(rng_seed, 1));
  State x(spec.dim);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double t = rng.uniform(0.0, spec.horizon);
    for (auto& c : x) c = rng.uniform(-2.0, 2.0);
    const std::size_t ui = rng.index(spec.u_grid.size());
    const std::size_t vi = rng.index(spec.v_grid.size());
    const auto ch = chain_characteristics(spec, t, x, spec.u_grid[ui], spec.v_grid[vi], h);
    r.empirical_m0_2 = std::max(r.empirical_m0_2, ch.sigma2);
  }
  return r;
}

double alpha2_reference(double m1, double m_prime, double delta) {
  return 2.0 / 3.0 * m1 * m_prime * std::sqrt(delta);
}

std::string to_text(const BoundsReport& r) {
  std::ostringstream os;
  const auto line = [&](const char* k, double v) { os << k << " = " << format_double(v) << '\n'; };
  line("h", r.h);
  line("sigma", r.sigma);
  line("T", r.horizon);
  os << "d = " << r.dim << '\n';
  line("kappa", r.kappa);
  line("m0_1", r.m0_1);
  line("m0_2", r.m0_2);
  line("theta", r.theta);
  line("beta", r.beta);
  line("c", r.c);
  line("c1", r.c1);
  line("c2", r.c2);
  line("guarantee_thm1", r.guarantee_thm1);
  line("bound_thm2", r.bound_thm2);
  line("bound_visc", r.bound_visc);
  line("empirical_m0_2", r.empirical_m0_2);
  return os.str();
}

nlohmann::json to_json(const BoundsReport& r) {
  return {{"h", r.h},
          {"sigma", r.sigma},
          {"T", r.horizon},
          {"d", r.dim},
          {"kappa", r.kappa},
          {"m0_1", r.m0_1},
          {"m0_2", r.m0_2},
          {"m0_2_kind", "certified bound d^{3/2} M1 h"},
          {"theta", r.theta},
          {"beta", r.beta},
          {"c", r.c},
          {"c1", r.c1},
          {"c2", r.c2},
          {"guarantee_thm1", r.guarantee_thm1},
          {"bound_thm2", r.bound_thm2},
          {"bound_visc", r.bound_visc},
          {"empirical_m0_2", r.empirical_m0_2},
          {"empirical_m0_2_kind", "sampled sup, |x_i| <= 2"}};
}

}  // namespace dgame
