#pragma once

#include <string_view>

#include "lanechange/core.h"
#include "lanechange/trajectory.h"

namespace lanechange::ocp {

/// Qualitative form of a CAV C trajectory.
enum class Shape {
  kAccelOnly,
  kDecelThenAccel,
  kDecelOnly,
  kCruise,
  kOther,
  kDegenerateZeroTime,
};

std::string_view to_string(Shape shape);
Shape classify_shape(const Trajectory& traj, double eps = 1e-9);
/// True when the trajectory contains a zero-control arc of at least
/// `min_duration` that is preceded by deceleration and followed by
/// acceleration.
bool has_interior_coast(const Trajectory& traj, double min_duration = 1e-3, double eps = 1e-9);

/// CAV C behind a constant-speed vehicle U in the slow lane. C must keep
/// x_U(t) - x_C(t) >= delta + phi * v_C(t) and end with v_C in [v_lo, v_hi].
struct CavCProblem {
  VehicleState c0;
  VehicleState u0;
  double t0 = 0.0;
  double v_lo = 27.0;
  double v_hi = 31.0;
  ControlBounds bounds;
  SpeedBounds speeds;
  SafetyParams safety;

  static CavCProblem make(VehicleState c0, VehicleState u0, double t0, const ManeuverParams& mp,
                          const ControlBounds& bounds, const SpeedBounds& speeds,
                          const SafetyParams& safety);

  /// x_U(t) - x_C - d(v_C) for a C state at absolute time t.
  double safety_slack(VehicleState c, double t) const;
  /// Minimum of safety_slack over 10 ms samples of traj (plus its endpoint).
  double min_safety_slack(const Trajectory& traj, double step = 0.01) const;
  void validate() const;
};

struct FixedTimeSolution {
  double energy = 0.0;
  Trajectory traj = Trajectory::stationary(0.0, {});
};

/// Minimum-energy C trajectory over the fixed horizon [t0, tf] (terminal
/// position free, terminal speed in the tolerance box). Candidate arc
/// structures are solved in closed form or by boundary-condition root finding,
/// checked at 10 ms sampling, and the cheapest feasible one is returned.
Result<FixedTimeSolution> min_energy_fixed_time(const CavCProblem& p, double tf);

struct CavCSolution {
  double tf_star = 0.0;
  Trajectory traj = Trajectory::stationary(0.0, {});
  double cost = 0.0;
  double energy = 0.0;
  double terminal_speed = 0.0;
  Shape shape = Shape::kDegenerateZeroTime;
};

struct FreeTimeOptions {
  double grid_step = 0.25;  // s, coarse scan used for bracketing
  double tolerance = 1e-3;  // s, final bracket width
};

/// g(tf) = beta (tf - t0) + E*(tf); +inf where the fixed-time problem is
/// infeasible or tf lies outside (t0, t0 + T_th].
double free_time_objective(const CavCProblem& p, double beta, double T_th, double tf);

/// Time/energy optimal C maneuver: minimizes g over tf in (t0, t0 + T_th].
/// Returns a degenerate zero-duration solution when C already satisfies the
/// terminal box with slack safety.
Result<CavCSolution> solve_cav_c_free_time(const CavCProblem& p, double beta, double T_th,
                                           FreeTimeOptions opts = {});

/// Smallest duration T in (0, T_max] for which the fixed-time problem is
/// feasible, to `tolerance` seconds.
Result<double> min_feasible_duration(const CavCProblem& p, double T_max, double tolerance = 1e-3);

struct TerminalInterval {
  double x_lo = 0.0;
  double x_hi = 0.0;
  bool contains(double x, double tol = 1e-9) const { return x >= x_lo - tol && x <= x_hi + tol; }
};

/// Positions reachable at tf: full braking to v_min then hold, full
/// acceleration to v_max then hold.
TerminalInterval feasible_terminal_interval(VehicleState s, double t0, double tf,
                                            const ControlBounds& bounds, const SpeedBounds& speeds);

/// Minimum-energy trajectory reaching position xf at time tf with free
/// terminal speed.
Result<Trajectory> solve_energy_fixed_endpoint(VehicleState s, double t0, double tf, double xf,
                                               const ControlBounds& bounds,
                                               const SpeedBounds& speeds);

}  // namespace lanechange::ocp
