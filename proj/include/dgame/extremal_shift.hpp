#ifndef DGAME_EXTREMAL_SHIFT_HPP
#define DGAME_EXTREMAL_SHIFT_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dgame/game_model.hpp"
#include "dgame/hjb_solver.hpp"
#include "dgame/lattice.hpp"
#include "dgame/trajectory.hpp"

namespace dgame {

/// Control-correction times t0 = tau_0 < ... < tau_r = T.
struct Partition {
  std::vector<double> times;

  /// Equal steps no longer than max_diameter.
  static Partition uniform(double t0, double T, double max_diameter);
  double diameter() const;
  /// Throws ConfigError unless strictly increasing, within [0, T], ending at T.
  void validate(double T) const;
};

/// Alignment functional <z - xi, b>. Branch one uses b = f(t, z, u, v);
/// branch two uses the chain's first moment b2(t, xi, u, v) at mesh h.
double varpi(const GameSpec& spec, double t, ConstVec z, ConstVec xi, ConstVec u,
             ConstVec v, Branch branch = Branch::one, double h = 0.0);

/// u attaining min_u max_v varpi; ties go to the lowest index.
std::size_t select_u(const GameSpec& spec, double t, ConstVec z, ConstVec xi,
                     Branch branch = Branch::one, double h = 0.0);
/// v attaining max_v min_u varpi; ties go to the lowest index.
std::size_t select_v(const GameSpec& spec, double t, ConstVec z, ConstVec xi,
                     Branch branch = Branch::one, double h = 0.0);

/// Model chain's first-player feedback: argmin of the upper Hamiltonian on
/// the solved slice at or below t.
std::size_t model_feedback(const SolveResult& eta, const GameSpec& spec, double t,
                           ConstPoint y);

/// What the second player sees when choosing its control on the original
/// system.
struct AdversaryContext {
  double t = 0.0;
  ConstVec x;
  ConstVec y;
  std::size_t u_index = 0;  // first player's control in force
  double t_l = 0.0;         // last correction time
  ConstVec x_l;
  ConstVec y_l;
  std::uint64_t replica_seed = 0;
};

/// Stateless second-player policy; safe to share across replica threads.
class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string name() const = 0;
  virtual std::size_t choose(const GameSpec& spec, const AdversaryContext& ctx) const = 0;
};

/// Always plays v_grid[index].
std::unique_ptr<Adversary> make_constant_adversary(std::size_t index);
/// Plays the v maximizing <sign(x), f(t, x, u, v)>: pushes every
/// coordinate away from the origin.
std::unique_ptr<Adversary> make_bang_bang_adversary();
/// Uniformly random grid element, redrawn every `switch_interval`.
std::unique_ptr<Adversary> make_random_adversary(double switch_interval);
/// Plays the model's own extremal-shift choice v_l = select_v(t_l, x_l, y_l).
std::unique_ptr<Adversary> make_shift_adversary(Branch branch, double h);

/// Names: "constant:<index>", "bang-bang", "random", "shift".
std::unique_ptr<Adversary> make_adversary(std::string_view name, const GameSpec& spec,
                                          double h);
/// constant (largest v), bang-bang, random (switch every 0.05 T), shift.
std::vector<std::unique_ptr<Adversary>> default_panel(const GameSpec& spec, double h);

enum class EventKind { partition, jump };

struct TrajectoryEvent {
  double t = 0.0;
  State x;
  State y;
  std::size_t u_index = 0;
  std::size_t v_index = 0;
  EventKind kind = EventKind::partition;
};

struct PairedTrajectory {
  std::vector<TrajectoryEvent> events;
  std::vector<double> partition_times;
  /// States at every partition time, including T.
  std::vector<State> x_at_partition;
  std::vector<State> y_at_partition;
  std::vector<std::size_t> u_log;        // u_l applied to x on interval l
  std::vector<std::size_t> v_model_log;  // v_l driving the model chain
  std::vector<std::size_t> v_log;        // adversary's control at each interval start
  std::size_t jump_count = 0;
  double outcome = 0.0;        // g(x(T))
  double model_outcome = 0.0;  // g(y(T))
};

struct ShiftOptions {
  Branch branch = Branch::one;
  bool record_events = true;
  /// RK4 step for the original system; <= 0 picks min(diam / 4, 1e-3 T).
  double ode_step = 0.0;
};

/// One coupled run. On each partition interval the original system uses
/// u_l = select_u(t_l, x(t_l), y(t_l)) against the adversary, while the
/// model chain jumps with rates Q^h(tau, model_feedback(eta, tau, y), v_l),
/// v_l = select_v(t_l, x(t_l), y(t_l)). y starts at the lattice point
/// nearest x0. `eta` should be solved with keep_all_steps.
PairedTrajectory run_extremal_shift(const GameSpec& spec, const Partition& partition,
                                    ConstVec x0, const SolveResult& eta,
                                    const Adversary& adversary, double h,
                                    std::uint64_t rng_seed, const ShiftOptions& options = {});

struct PanelResult {
  std::string adversary;
  OutcomeEstimate outcome;
  OutcomeEstimate model_outcome;
  std::vector<double> outcomes;
  std::vector<double> model_outcomes;
  std::vector<double> partition_times;
  /// |X(t_l) - Y(t_l)|^2, row-major: replica-by-partition-time.
  std::vector<double> coupling_sq;
};

/// n replicas with seeds derive_seed(rng_seed, i), run in parallel.
PanelResult run_extremal_panel(const GameSpec& spec, const Partition& partition,
                               ConstVec x0, const SolveResult& eta,
                               const Adversary& adversary, double h, std::size_t n,
                               std::uint64_t rng_seed, const ShiftOptions& options = {});

struct CouplingReport {
  std::vector<double> mean_sq;  // E|X - Y|^2 at each partition time
  std::vector<double> residual; // mean of the one-step excess, per interval
  /// Smallest eps >= 0 such that every interval satisfies
  ///   E|X_{l+1}-Y_{l+1}|^2 <= E|X_l-Y_l|^2 (1 + beta d_l) + (theta + eps) d_l
  /// up to three standard errors.
  double fitted_slack = 0.0;
};

CouplingReport coupling_check(const PanelResult& panel, double beta, double theta);

/// Columns t, x_1..x_d, y_1..y_d, u_index, v_index.
void write_trajectory_csv(const std::string& path, const PairedTrajectory& traj,
                          const std::vector<std::string>& metadata = {});
/// Columns replica, outcome, model_outcome.
void write_replica_csv(const std::string& path, const PanelResult& panel,
                       const std::vector<std::string>& metadata = {});

}  // namespace dgame

#endif
