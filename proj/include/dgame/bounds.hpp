#ifndef DGAME_BOUNDS_HPP
#define DGAME_BOUNDS_HPP

#include <cstddef>
#include <cstdint>
#include <string>

#include "json.hpp"

#include "dgame/game_model.hpp"

namespace dgame {

/// Constants of the approximation theorems and the guarantees they imply.
/// m0_2 is the certified bound d^{3/2} M1 h; empirical_m0_2 is the sampled
/// sup of the chain's quadratic characteristic and is never used in a bound.
struct BoundsReport {
  double h = 0.0;
  double sigma = 0.0;
  double horizon = 0.0;
  std::size_t dim = 0;
  double kappa = 0.0;
  double m0_1 = 0.0;
  double m0_2 = 0.0;
  double theta = 0.0;
  double beta = 0.0;
  double c = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double guarantee_thm1 = 0.0;  // R C sqrt(theta)
  double bound_thm2 = 0.0;      // R C2 sqrt(h)
  double bound_visc = 0.0;      // R C1 sigma
  double empirical_m0_2 = 0.0;
};

/// Second-model first moment, as a drift-like callable.
using ModelDriftFn = std::function<void(double t, ConstVec x, ConstVec u, ConstVec v,
                                        std::span<double> out)>;

/// max over sampled (t, x, u, v) of |f - b|^2, x ~ U[-radius, radius]^d.
double kappa_sampled(const GameSpec& spec, const ModelDriftFn& model, std::size_t n_samples,
                     std::uint64_t rng_seed, double radius = 2.0);

/// kappa for the lattice chain: for h < 1 every atom lies in the unit ball
/// and b2 = f exactly, so this is 0 without sampling. Otherwise sampled.
double kappa(const GameSpec& spec, double h, std::size_t n_samples = 1000,
             std::uint64_t rng_seed = 0);

/// 2 + 2 K.
double beta(double lipschitz);
/// Branch one uses the original system's K1. The lattice chain's first
/// moment equals f for h < 1, so branch two has the same constant.
double beta(const GameSpec& spec, Branch branch);

/// sqrt(T e^{beta T}).
double c_constant(double horizon, double beta);

/// Throws InvalidSpecError for h >= 1 unless allow_coarse is set (then
/// kappa is sampled).
BoundsReport assemble(const GameSpec& spec, double h, double sigma = 0.0,
                      std::size_t n_samples = 1000, std::uint64_t rng_seed = 0,
                      bool allow_coarse = false);

/// Optional reference for the moment modulus: (2/3) M1 M' delta^{1/2}.
double alpha2_reference(double m1, double m_prime, double delta);

/// "key = value" lines, 17 significant digits.
std::string to_text(const BoundsReport& r);
nlohmann::json to_json(const BoundsReport& r);

}  // namespace dgame

#endif
