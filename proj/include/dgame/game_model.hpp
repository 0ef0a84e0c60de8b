#ifndef DGAME_GAME_MODEL_HPP
#define DGAME_GAME_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dgame {

using State = std::vector<double>;
using ConstVec = std::span<const double>;

/// Finite discretization of a compact control set. Controls may be
/// vectors; element k occupies flat[k*dim, (k+1)*dim).
class ControlGrid {
 public:
  ControlGrid() = default;
  ControlGrid(std::size_t dim, std::vector<double> flat);
  static ControlGrid scalar(std::vector<double> values);

  std::size_t size() const { return dim_ == 0 ? 0 : flat_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return size() == 0; }

  ConstVec operator[](std::size_t k) const {
    return ConstVec(flat_.data() + k * dim_, dim_);
  }

  /// True if c lies in the componentwise bounding box of the grid, which
  /// stands in for the compact set the grid discretizes.
  bool covers(ConstVec c, double tol = 1e-12) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> flat_;
};

/// f(t, x, u, v) written into `out` (size d).
using DriftFn = std::function<void(double t, ConstVec x, ConstVec u,
                                   ConstVec v, std::span<double> out)>;
using PayoffFn = std::function<double(ConstVec x)>;
using ValueFn = std::function<double(double t, ConstVec x)>;

/// Which system's drift the alignment functional uses: the original game's
/// (branch one) or the model chain's (branch two).
enum class Branch { one, two };

/// Terminal-payoff zero-sum differential game  x' = f(t, x, u, v),
/// payoff g(x(T)). The first player (u) minimizes.
struct GameSpec {
  std::string name;
  std::size_t dim = 1;
  double horizon = 1.0;
  DriftFn drift;
  ControlGrid u_grid;
  ControlGrid v_grid;
  PayoffFn payoff;
  double payoff_lipschitz = 0.0;  // R
  double drift_bound = 0.0;       // M1, sup |f|
  double drift_lipschitz = 0.0;   // K1, Lipschitz constant of f in x
  /// Known value function, when the catalog provides one.
  ValueFn closed_form_value;
  /// JSON echo of the definition, used for config hashing.
  nlohmann::json source;
};

/// Throws InvalidSpecError on empty grids, missing callables, or
/// non-positive dimension/horizon.
void validate_structure(const GameSpec& spec);

/// Unchecked hot-path evaluation by grid index.
inline void drift_at(const GameSpec& spec, double t, ConstVec x,
                     std::size_t ui, std::size_t vi, std::span<double> out) {
  spec.drift(t, x, spec.u_grid[ui], spec.v_grid[vi], out);
}

/// Checked evaluation: t in [0,T], controls inside the compact sets,
/// finite output.
State eval_drift(const GameSpec& spec, double t, ConstVec x, ConstVec u,
                 ConstVec v);
double eval_payoff(const GameSpec& spec, ConstVec x);

struct IsaacsReport {
  double max_gap = 0.0;
  std::size_t samples = 0;
};

/// |min_u max_v <xi,f> - max_v min_u <xi,f>| over the grids at one point.
double isaacs_gap_at(const GameSpec& spec, double t, ConstVec x, ConstVec xi);

/// Samples t ~ U[0,T], x and xi ~ U[-radius, radius]^d.
IsaacsReport check_isaacs(const GameSpec& spec, std::size_t n_samples,
                          std::uint64_t rng_seed, double radius = 2.0);

struct ConstantsReport {
  double max_drift_norm = 0.0;
  double max_payoff_quotient = 0.0;
  double max_drift_quotient = 0.0;
  std::size_t samples = 0;
  bool ok(const GameSpec& spec, double tol = 1e-12) const;
};

/// Sampled checks of the declared R, M1, K1 on [-radius, radius]^d.
ConstantsReport sample_constants(const GameSpec& spec, std::size_t n_samples,
                                 std::uint64_t rng_seed, double radius = 2.0);

// ---- catalog -------------------------------------------------------------

/// Names: "G1", "G2", "B1", "zero". Throws InvalidSpecError otherwise.
///   G1: d=1, f=u+v, U={-1,0,1}, V={-0.5,0,0.5}, g=|x|, T=1.
///       Val(t,x) = max(|x| - 0.5 (T-t), 0).
///   G2: d=2, f=(v x2 - u, u x1 + v), U={-1,0,1}, V={-0.5,0,0.5}, g=|x|.
///       M1, K1 are declared for the box |x_i| <= 2.
///   B1: d=1, f=u v, U=V={-1,1}, g=|x|. Fails the Isaacs condition.
///   zero: d=1, f=0, g=|x|.
GameSpec catalog_game(std::string_view name);

/// d-dimensional game with a single control pair and constant drift c.
GameSpec constant_drift_game(std::vector<double> c, double horizon = 1.0);

/// Game definition file. See README for the schema.
GameSpec parse_game_json(const nlohmann::json& j);
GameSpec load_game_file(const std::string& path);

}  // namespace dgame

#endif
