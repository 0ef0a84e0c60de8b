#ifndef DGAME_RNG_HPP
#define DGAME_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <random>

namespace dgame {

/// SplitMix64 finalizer. Used only for deriving stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of stream `stream` under top-level seed `seed`:
///   splitmix64(splitmix64(seed) ^ (stream + 1) * 0x9E3779B97F4A7C15).
/// Replica i of a Monte-Carlo run uses derive_seed(seed, i).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Thin wrapper over std::mt19937_64. Variates are produced by explicit
/// transforms (53-bit uniforms, inverse-CDF exponentials) rather than
/// <random> distributions, whose algorithms differ between standard
/// library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Exp(rate); rate must be > 0.
  double exponential(double rate);
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace dgame

#endif
