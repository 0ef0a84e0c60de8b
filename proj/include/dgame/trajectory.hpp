#ifndef DGAME_TRAJECTORY_HPP
#define DGAME_TRAJECTORY_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dgame/game_model.hpp"
#include "dgame/lattice.hpp"

namespace dgame {

/// Feedback policy returning an index into the player's control grid.
using ControlPolicy = std::function<std::size_t(double t, ConstVec state)>;

/// Policy that always plays grid element `index`.
ControlPolicy constant_policy(std::size_t index);

struct OdeTrajectory {
  std::vector<double> times;
  std::vector<State> states;

  const State& final_state() const { return states.back(); }
  /// Piecewise-linear interpolation between samples.
  State at(double t) const;
};

/// Classical RK4 with controls held at their value at each step start.
/// step <= 0 picks min(1e-3 T, T - t0).
OdeTrajectory integrate_ode(const GameSpec& spec, const ControlPolicy& u_policy,
                            const ControlPolicy& v_policy, ConstVec x0, double t0,
                            double step = 0.0);

/// One constant-state piece of a chain path, with the controls in force.
struct ChainSegment {
  double t = 0.0;
  LatticePoint y;
  std::size_t u_index = 0;
  std::size_t v_index = 0;
};

struct ChainPath {
  double h = 0.0;
  double t0 = 0.0;
  double t_end = 0.0;
  std::vector<ChainSegment> segments;
  std::size_t jump_count = 0;

  const ChainSegment& segment_at(double t) const;
  State state_at(double t) const;
};

struct ChainOptions {
  /// Extra times at which the controls are re-evaluated.
  std::vector<double> correction_times;
};

/// Exponential-clock simulation of the lattice chain by thinning against
/// the rate majorant d M1 / h: candidate events arrive as a Poisson stream
/// of that rate, controls and rates are evaluated at each candidate, and the
/// candidate becomes a jump with probability total_rate / majorant.
ChainPath simulate_chain(const GameSpec& spec, const ControlPolicy& u_policy,
                         const ControlPolicy& v_policy, ConstPoint xi0, double h,
                         double t0, std::uint64_t rng_seed, const ChainOptions& options = {});

struct OutcomeEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  std::pair<double, double> ci95{0.0, 0.0};
};

/// Fixed-order pairwise summation; the result depends only on the data.
double pairwise_sum(std::span<const double> xs);

/// Sample mean and standard error (n - 1 denominator). n >= 2.
OutcomeEstimate summarize(std::span<const double> samples);

/// Replica i receives seed derive_seed(rng_seed, i).
using Replica = std::function<double(std::uint64_t seed, std::size_t index)>;

/// Runs replicas in parallel, stores outcomes by index, then reduces in a
/// fixed order. Throws Error naming the first failing replica.
OutcomeEstimate monte_carlo_outcome(const Replica& run, std::size_t n,
                                    std::uint64_t rng_seed,
                                    std::vector<double>* outcomes = nullptr);

struct MomentReport {
  double empirical = 0.0;   // mean |Z(t) - Z(s)|^2
  double std_error = 0.0;
  double bound = 0.0;       // certified part of the bound
  double fitted_slack = 0.0;  // excess per unit time beyond bound + 3 SE
  bool within = true;
};

/// ODE paths: each |x(t) - x(s)|^2 is compared with (M1 (t - s))^2.
MomentReport moment_growth_check(std::span<const OdeTrajectory> paths, double s,
                                 double t, const GameSpec& spec);

/// Chain paths: mean |y(t) - y(s)|^2 against m0_2 (t - s); the remainder
/// (the unspecified modulus term) is reported as fitted slack.
MomentReport moment_growth_check(std::span<const ChainPath> paths, double s, double t,
                                 double m0_2);

enum class TestFunction { linear, quadratic };

struct ResidualReport {
  TestFunction test_function = TestFunction::linear;
  double max_abs_residual = 0.0;
  std::vector<double> checkpoints;
  std::vector<double> means;
  std::vector<double> std_errors;
  std::vector<bool> ci_contains_zero;

  bool all_contain_zero() const;
};

/// Per checkpoint c: mean over paths of
///   phi(Y(c)) - phi(Y(t0)) - integral_{t0}^{c} L phi(Y(tau)) d tau,
/// phi = <a, .> or |. - a|^2; the integral uses each segment's controls.
/// Zero is "inside" when |mean| <= 3 SE.
ResidualReport martingale_residual(std::span<const ChainPath> paths, const GameSpec& spec,
                                   TestFunction phi, ConstVec a,
                                   const std::vector<double>& checkpoints);

/// CSV of a chain path: t, y_1..y_d, u_index, v_index.
void write_chain_csv(const std::string& path, const ChainPath& chain,
                     const std::vector<std::string>& metadata = {});

}  // namespace dgame

#endif
