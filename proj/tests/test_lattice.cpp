#include "doctest.h"

#include <cmath>
#include <map>

#include "dgame/errors.hpp"
#include "dgame/lattice.hpp"
#include "fixtures.hpp"

using namespace dgame;

namespace {

GameSpec constant_game(State c) { return constant_drift_game(std::move(c)); }

const State kNone{0.0};

}  // namespace

TEST_CASE("chi is the sign") {
  CHECK(chi(2.0) == 1);
  CHECK(chi(-0.3) == -1);
  CHECK(chi(0.0) == 0);
}

TEST_CASE("jump measure examples") {
  SUBCASE("d=1, f=2, h=0.5") {
    const auto atoms = jump_measure(constant_game({2.0}), 0, State{0.0}, kNone, kNone, 0.5);
    REQUIRE(atoms.size() == 1);
    CHECK(atoms[0].offset[0] == 0.5);
    CHECK(atoms[0].mass == 4.0);
  }
  SUBCASE("d=2, f=(1,-1), h=0.25") {
    const auto atoms =
        jump_measure(constant_game({1.0, -1.0}), 0, State{0, 0}, kNone, kNone, 0.25);
    REQUIRE(atoms.size() == 2);
    CHECK(atoms[0].offset == State{0.25, 0.0});
    CHECK(atoms[0].mass == 4.0);
    CHECK(atoms[1].offset == State{0.0, -0.25});
    CHECK(atoms[1].mass == 4.0);
  }
  SUBCASE("zero drift") {
    CHECK(jump_measure(constant_game({0.0, 0.0}), 0, State{0, 0}, kNone, kNone, 0.1).empty());
  }
  SUBCASE("components below the rate floor are dropped") {
    CHECK(jump_measure(constant_game({1e-15}), 0, State{0}, kNone, kNone, 0.1).empty());
  }
}

TEST_CASE("Kolmogorov rates examples") {
  SUBCASE("d=1, f=2, h=0.5, x=0") {
    const auto r = kolmogorov_rates(constant_game({2.0}), 0, LatticePoint{0}, kNone, kNone, 0.5);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].target == LatticePoint{1});
    CHECK(r.entries[0].rate == 4.0);
    CHECK(r.total_rate == 4.0);
  }
  SUBCASE("absorbing state") {
    const auto r = kolmogorov_rates(constant_game({0.0}), 0, LatticePoint{3}, kNone, kNone, 0.5);
    CHECK(r.entries.empty());
    CHECK(r.total_rate == 0.0);
  }
  SUBCASE("G1 at u=1, v=0.5, h=0.1") {
    const auto g = catalog_game("G1");
    const auto r = kolmogorov_rates(g, 0, LatticePoint{0}, State{1.0}, State{0.5}, 0.1);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].target == LatticePoint{1});
    CHECK(r.entries[0].rate == doctest::Approx(15.0).epsilon(1e-15));
    CHECK(r.total_rate == doctest::Approx(15.0).epsilon(1e-15));
  }
}

TEST_CASE("generator examples") {
  const auto g = constant_game({2.0});
  SUBCASE("linear test function gives <a, f>") {
    LatticeFunction phi = [](ConstPoint p) { return 3.0 * 0.5 * static_cast<double>(p[0]); };
    CHECK(apply_generator(phi, g, 0, LatticePoint{4}, kNone, kNone, 0.5) == 6.0);
  }
  SUBCASE("constants are annihilated") {
    LatticeFunction phi = [](ConstPoint) { return 7.0; };
    CHECK(apply_generator(phi, g, 0, LatticePoint{-3}, kNone, kNone, 0.5) == 0.0);
  }
  SUBCASE("quadratic centred at x gives sigma2") {
    const double h = 0.5;
    const double a = 1.0;  // x = 2 * h
    LatticeFunction phi = [&](ConstPoint p) {
      const double y = h * static_cast<double>(p[0]) - a;
      return y * y;
    };
    CHECK(apply_generator(phi, g, 0, LatticePoint{2}, kNone, kNone, h) == 1.0);
  }
}

TEST_CASE("chain characteristics examples") {
  auto c = chain_characteristics(constant_game({2.0}), 0, State{0}, kNone, kNone, 0.5);
  CHECK(c.b2 == State{2.0});
  CHECK(c.sigma2 == 1.0);
  CHECK_FALSE(c.jumps_leave_unit_ball);
  c = chain_characteristics(constant_game({0.0}), 0, State{0}, kNone, kNone, 0.5);
  CHECK(c.b2 == State{0.0});
  CHECK(c.sigma2 == 0.0);
  c = chain_characteristics(constant_game({1.0, -1.0}), 0, State{0, 0}, kNone, kNone, 0.1);
  CHECK(c.b2 == State{1.0, -1.0});
  CHECK(c.sigma2 == doctest::Approx(0.2).epsilon(1e-15));
  c = chain_characteristics(constant_game({1.0}), 0, State{0}, kNone, kNone, 1.5);
  CHECK(c.jumps_leave_unit_ball);
}

TEST_CASE("randomized generator identities") {
  Rng rng(2024);
  for (int s = 0; s < 300; ++s) {
    const std::size_t d = 1 + rng.index(3);
    const auto g = fixtures::random_affine_game(rng, d);
    const double h = rng.uniform(0.01, 0.99);
    const double t = rng.uniform(0, 1);
    LatticePoint x(d);
    State a(d);
    for (auto& c : x) c = static_cast<std::int64_t>(rng.index(41)) - 20;
    for (auto& c : a) c = rng.uniform(-1, 1);
    const auto u = g.u_grid[rng.index(g.u_grid.size())];
    const auto v = g.v_grid[rng.index(g.v_grid.size())];
    const State xs = lattice_state(x, h);
    const auto ch = chain_characteristics(g, t, xs, u, v, h);
    const State f = eval_drift(g, t, xs, u, v);

    LatticeFunction lin = [&](ConstPoint p) {
      double r = 0.0;
      for (std::size_t i = 0; i < d; ++i) r += a[i] * h * static_cast<double>(p[i]);
      return r;
    };
    LatticeFunction quad = [&](ConstPoint p) {
      double r = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double y = h * static_cast<double>(p[i]) - a[i];
        r += y * y;
      }
      return r;
    };
    double ab = 0.0, xab = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      ab += a[i] * ch.b2[i];
      xab += (xs[i] - a[i]) * ch.b2[i];
    }
    CHECK(apply_generator(lin, g, t, x, u, v, h) == doctest::Approx(ab).epsilon(1e-12));
    CHECK(std::abs(apply_generator(quad, g, t, x, u, v, h) - (ch.sigma2 + 2.0 * xab)) <= 1e-10);
    for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(ch.b2[i] - f[i]) <= 1e-15 * (1 + std::abs(f[i])));

    const auto rates = kolmogorov_rates(g, t, x, u, v, h);
    double sum = 0.0;
    for (const auto& e : rates.entries) {
      CHECK(e.rate > 0.0);
      sum += e.rate;
      int moved = 0;
      for (std::size_t i = 0; i < d; ++i) moved += std::abs(e.target[i] - x[i]);
      CHECK(moved == 1);
    }
    CHECK(rates.entries.size() <= d);
    CHECK(sum - rates.total_rate == 0.0);
    // sigma2 = h sum |f_i| <= sqrt(d) h |f|; the declared M1 only covers |x_i| <= 2
    double fn = 0.0;
    for (double c : f) fn += c * c;
    CHECK(ch.sigma2 <= std::sqrt(static_cast<double>(d)) * h * std::sqrt(fn) * (1 + 1e-12));
    bool inside = true;
    for (double c : xs) inside = inside && std::abs(c) <= 2.0;
    if (inside) CHECK(ch.sigma2 <= std::pow(static_cast<double>(d), 1.5) * g.drift_bound * h);
  }
}

TEST_CASE("lattice domain index map round-trips") {
  const LatticeDomain dom(0.1, {-3, 0, 2}, {2, 4, 3});
  CHECK(dom.size() == 6 * 5 * 2);
  for (std::size_t k = 0; k < dom.size(); ++k) {
    const auto p = dom.point(k);
    REQUIRE(dom.index_of(p));
    CHECK(*dom.index_of(p) == k);
    for (std::size_t a = 0; a < 3; ++a) CHECK(dom.coord(k, a) == p[a]);
  }
  CHECK_FALSE(dom.index_of(LatticePoint{3, 0, 2}));
  CHECK(dom.on_boundary(0));
  CHECK_THROWS_AS(LatticeDomain(0.1, {1}, {0}), InvalidSpecError);
  CHECK_THROWS_AS(LatticeDomain(0.0, {0}, {1}), InvalidSpecError);
}

TEST_CASE("nearest lattice point rounds ties toward minus infinity") {
  CHECK(nearest_lattice_point(State{0.25}, 0.5) == LatticePoint{0});
  CHECK(nearest_lattice_point(State{-0.25}, 0.5) == LatticePoint{-1});
  CHECK(nearest_lattice_point(State{0.26}, 0.5) == LatticePoint{1});
  CHECK(nearest_lattice_point(State{1.0, -1.0}, 0.05) == LatticePoint{20, -20});
  CHECK(lattice_state(LatticePoint{3, -2}, 0.25) == State{0.75, -0.5});
}
