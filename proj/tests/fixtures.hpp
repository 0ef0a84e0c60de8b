// Shared test fixtures.
#ifndef DGAME_TESTS_FIXTURES_HPP
#define DGAME_TESTS_FIXTURES_HPP

#include <cmath>
#include <vector>

#include "dgame/game_model.hpp"
#include "dgame/rng.hpp"

namespace fixtures {

/// f = A x + B u + C v + c with random coefficients, random scalar grids
/// and time modulation (1 + t/2) so that the drift depends on t too.
/// M1 is declared for |x_i| <= 2.
inline dgame::GameSpec random_affine_game(dgame::Rng& rng, std::size_t d) {
  using namespace dgame;
  std::vector<double> A(d * d), B(d), C(d), c(d);
  for (auto& a : A) a = rng.uniform(-1, 1);
  for (auto& b : B) b = rng.uniform(-2, 2);
  for (auto& b : C) b = rng.uniform(-2, 2);
  for (auto& b : c) b = rng.uniform(-0.5, 0.5);
  // exact zero components exercise the chi = 0 branch
  if (rng.uniform() < 0.3) {
    const auto k = rng.index(d);
    for (std::size_t j = 0; j < d; ++j) A[k * d + j] = 0.0;
    B[k] = C[k] = c[k] = 0.0;
  }
  GameSpec g;
  g.name = "random-affine";
  g.dim = d;
  g.horizon = 1.0;
  g.drift = [=](double t, ConstVec x, ConstVec u, ConstVec v, std::span<double> out) {
    for (std::size_t r = 0; r < d; ++r) {
      double s = c[r] + B[r] * u[0] + C[r] * v[0];
      for (std::size_t k = 0; k < d; ++k) s += A[r * d + k] * x[k];
      out[r] = s * (1.0 + 0.5 * t);
    }
  };
  std::vector<double> ug, vg;
  const auto nu = 2 + rng.index(3), nv = 2 + rng.index(3);
  for (std::size_t k = 0; k < nu; ++k) ug.push_back(rng.uniform(-1, 1));
  for (std::size_t k = 0; k < nv; ++k) vg.push_back(rng.uniform(-1, 1));
  g.u_grid = ControlGrid::scalar(ug);
  g.v_grid = ControlGrid::scalar(vg);
  g.payoff = [](ConstVec x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    return std::sqrt(s);
  };
  g.payoff_lipschitz = 1.0;
  double m = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    double row = std::abs(c[r]) + std::abs(B[r]) + std::abs(C[r]);
    for (std::size_t k = 0; k < d; ++k) row += 2.0 * std::abs(A[r * d + k]);
    m += 1.5 * 1.5 * row * row;
  }
  g.drift_bound = std::sqrt(m);
  double k2 = 0.0;
  for (double a : A) k2 += a * a;
  g.drift_lipschitz = 1.5 * std::sqrt(k2);
  return g;
}

}  // namespace fixtures

#endif
