#include "dgame/lattice.hpp"

#include <cmath>

#include "dgame/errors.hpp"

namespace dgame {

LatticeDomain::LatticeDomain(double h, LatticePoint lo, LatticePoint hi)
    : h_(h), lo_(std::move(lo)), hi_(std::move(hi)) {
  if (!(h_ > 0.0)) throw InvalidSpecError("lattice: mesh h must be positive");
  if (lo_.size() != hi_.size() || lo_.empty())
    throw InvalidSpecError("lattice: corner dimensions disagree");
  const std::size_t d = lo_.size();
  strides_.assign(d, 1);
  size_ = 1;
  for (std::size_t a = d; a-- > 0;) {
    if (lo_[a] > hi_[a]) throw InvalidSpecError("lattice: lo > hi");
    strides_[a] = size_;
    size_ *= static_cast<std::size_t>(hi_[a] - lo_[a] + 1);
  }
}

bool LatticeDomain::contains(ConstPoint p) const {
  if (p.size() != dim()) return false;
  for (std::size_t a = 0; a < p.size(); ++a)
    if (p[a] < lo_[a] || p[a] > hi_[a]) return false;
  return true;
}

std::optional<std::size_t> LatticeDomain::index_of(ConstPoint p) const {
  if (!contains(p)) return std::nullopt;
  std::size_t k = 0;
  for (std::size_t a = 0; a < p.size(); ++a)
    k += static_cast<std::size_t>(p[a] - lo_[a]) * strides_[a];
  return k;
}

void LatticeDomain::point_into(std::size_t k, std::span<std::int64_t> out) const {
  for (std::size_t a = 0; a < dim(); ++a) out[a] = coord(k, a);
}

LatticePoint LatticeDomain::point(std::size_t k) const {
  LatticePoint p(dim());
  point_into(k, p);
  return p;
}

void LatticeDomain::state_into(std::size_t k, std::span<double> out) const {
  for (std::size_t a = 0; a < dim(); ++a)
    out[a] = h_ * static_cast<double>(coord(k, a));
}

State LatticeDomain::state(std::size_t k) const {
  State s(dim());
  state_into(k, s);
  return s;
}

bool LatticeDomain::on_boundary(std::size_t k) const {
  for (std::size_t a = 0; a < dim(); ++a) {
    auto c = coord(k, a);
    if (c == lo_[a] || c == hi_[a]) return true;
  }
  return false;
}

LatticePoint nearest_lattice_point(ConstVec x, double h) {
  LatticePoint p(x.size());
  for (std::size_t a = 0; a < x.size(); ++a)
    p[a] = static_cast<std::int64_t>(std::ceil(x[a] / h - 0.5));
  return p;
}

State lattice_state(ConstPoint p, double h) {
  State s(p.size());
  for (std::size_t a = 0; a < p.size(); ++a) s[a] = h * static_cast<double>(p[a]);
  return s;
}

std::vector<JumpAtom> jump_measure(const GameSpec& spec, double t, ConstVec x,
                                   ConstVec u, ConstVec v, double h) {
  if (!(h > 0.0)) throw InvalidSpecError("jump_measure: h must be positive");
  State f(spec.dim);
  spec.drift(t, x, u, v, f);
  std::vector<JumpAtom> atoms;
  for_each_jump(f, h, [&](std::size_t axis, int dir, double rate) {
    JumpAtom a{State(spec.dim, 0.0), rate};
    a.offset[axis] = h * dir;
    atoms.push_back(std::move(a));
  });
  return atoms;
}

RateList kolmogorov_rates(const GameSpec& spec, double t, ConstPoint x,
                          ConstVec u, ConstVec v, double h) {
  if (!(h > 0.0)) throw InvalidSpecError("kolmogorov_rates: h must be positive");
  State xs = lattice_state(x, h);
  State f(spec.dim);
  spec.drift(t, xs, u, v, f);
  RateList list;
  for_each_jump(f, h, [&](std::size_t axis, int dir, double rate) {
    Transition tr{LatticePoint(x.begin(), x.end()), rate};
    tr.target[axis] += dir;
    list.entries.push_back(std::move(tr));
    list.total_rate += rate;
  });
  return list;
}

double apply_generator(const LatticeFunction& phi, const GameSpec& spec,
                       double t, ConstPoint x, ConstVec u, ConstVec v, double h) {
  RateList rates = kolmogorov_rates(spec, t, x, u, v, h);
  if (rates.entries.empty()) return 0.0;
  const double here = phi(x);
  double sum = 0.0;
  for (const auto& e : rates.entries) sum += e.rate * (phi(e.target) - here);
  return sum;
}

ChainCharacteristics chain_characteristics(const GameSpec& spec, double t,
                                           ConstVec x, ConstVec u, ConstVec v,
                                           double h) {
  if (!(h > 0.0)) throw InvalidSpecError("chain_characteristics: h must be positive");
  State f(spec.dim);
  spec.drift(t, x, u, v, f);
  ChainCharacteristics c;
  c.b2.assign(spec.dim, 0.0);
  c.jumps_leave_unit_ball = h >= 1.0;
  for_each_jump(f, h, [&](std::size_t axis, int dir, double rate) {
    const double offset = h * dir;
    c.b2[axis] += offset * rate;
    c.sigma2 += offset * offset * rate;
  });
  return c;
}

}  // namespace dgame
