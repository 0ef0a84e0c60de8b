#ifndef DGAME_LATTICE_HPP
#define DGAME_LATTICE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dgame/game_model.hpp"

namespace dgame {

using LatticePoint = std::vector<std::int64_t>;
using ConstPoint = std::span<const std::int64_t>;

/// Rates with |f_i| below this are treated as f_i = 0.
inline constexpr double kRateFloor = 1e-14;

/// Inclusive box [lo, hi] of hZ^d in lattice coordinates (state = h * index),
/// with a dense row-major index map (last axis fastest).
class LatticeDomain {
 public:
  LatticeDomain() = default;
  LatticeDomain(double h, LatticePoint lo, LatticePoint hi);

  double mesh() const { return h_; }
  std::size_t dim() const { return lo_.size(); }
  std::size_t size() const { return size_; }
  const LatticePoint& lo() const { return lo_; }
  const LatticePoint& hi() const { return hi_; }
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }
  std::int64_t extent(std::size_t axis) const { return hi_[axis] - lo_[axis] + 1; }

  bool contains(ConstPoint p) const;
  std::optional<std::size_t> index_of(ConstPoint p) const;
  LatticePoint point(std::size_t k) const;
  void point_into(std::size_t k, std::span<std::int64_t> out) const;
  State state(std::size_t k) const;
  void state_into(std::size_t k, std::span<double> out) const;
  /// Coordinate of dense index k along `axis`.
  std::int64_t coord(std::size_t k, std::size_t axis) const {
    return lo_[axis] + static_cast<std::int64_t>((k / strides_[axis]) %
                                                 static_cast<std::size_t>(extent(axis)));
  }
  bool on_boundary(std::size_t k) const;

  bool operator==(const LatticeDomain& o) const {
    return h_ == o.h_ && lo_ == o.lo_ && hi_ == o.hi_;
  }

 private:
  double h_ = 0.0;
  LatticePoint lo_, hi_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Nearest lattice point to x; exact half-way ties go toward -infinity.
LatticePoint nearest_lattice_point(ConstVec x, double h);
State lattice_state(ConstPoint p, double h);

/// Sign of a drift component: +1, -1, or 0.
inline int chi(double f) { return (f > 0.0) - (f < 0.0); }

/// Calls fn(axis, direction, rate) for every coordinate with a nonzero
/// jump; rate = |f_i| / h, direction = chi(f_i).
template <class Fn>
inline void for_each_jump(std::span<const double> f, double h, Fn&& fn) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = std::abs(f[i]);
    if (a < kRateFloor) continue;
    fn(i, chi(f[i]), a / h);
  }
}

struct JumpAtom {
  State offset;  // h * chi_i * e^i
  double mass;   // |f_i| / h
};

/// Finite jump measure of the lattice chain: one atom per nonzero f_i.
std::vector<JumpAtom> jump_measure(const GameSpec& spec, double t, ConstVec x,
                                   ConstVec u, ConstVec v, double h);

struct Transition {
  LatticePoint target;
  double rate = 0.0;
};

struct RateList {
  std::vector<Transition> entries;
  double total_rate = 0.0;
};

/// Off-diagonal row of the Kolmogorov matrix at lattice point x;
/// total_rate is the negated diagonal.
RateList kolmogorov_rates(const GameSpec& spec, double t, ConstPoint x,
                          ConstVec u, ConstVec v, double h);

using LatticeFunction = std::function<double(ConstPoint)>;

/// sum_i |f_i| (phi(x + h chi_i e^i) - phi(x)) / h.
double apply_generator(const LatticeFunction& phi, const GameSpec& spec,
                       double t, ConstPoint x, ConstVec u, ConstVec v, double h);

struct ChainCharacteristics {
  State b2;
  double sigma2 = 0.0;
  /// h >= 1: some atoms fall outside the unit ball. The measure is finite,
  /// so b2 is still reported as the plain first moment.
  bool jumps_leave_unit_ball = false;
};

/// First moment b2 = integral of y over the jump measure, and
/// sigma2 = integral of |y|^2 = h * sum_i |f_i|.
ChainCharacteristics chain_characteristics(const GameSpec& spec, double t,
                                           ConstVec x, ConstVec u, ConstVec v,
                                           double h);

}  // namespace dgame

#endif
