#include "dgame/rng.hpp"

#include <cmath>

namespace dgame {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ ((stream + 1) * 0x9E3779B97F4A7C15ULL));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::exponential(double rate) {
  // 1 - U lies in (0, 1], so the log is finite.
  return -std::log1p(-uniform()) / rate;
}

std::size_t Rng::index(std::size_t n) {
  auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

}  // namespace dgame
