#pragma once

#include <span>
#include <vector>

#include "lanechange/core.h"

namespace lanechange {

/// One arc of a longitudinal trajectory. Two closed-form control laws occur in
/// the solvers:
///   kAffine      u(tau) = u0 + jerk * tau
///   kHeadway     v relaxes exponentially toward v_target with time constant
///                tau_c, i.e. u = (v_target - v) / tau_c. This is the control
///                that rides the safety boundary behind a constant-speed leader.
/// tau is the time since the arc start.
struct Arc {
  enum class Kind { kAffine, kHeadway };

  Kind kind = Kind::kAffine;
  double t_start = 0.0;
  double t_end = 0.0;
  VehicleState start;
  double u0 = 0.0;
  double jerk = 0.0;
  double v_target = 0.0;
  double tau_c = 1.0;

  double duration() const { return t_end - t_start; }
  VehicleState state_at(double t) const;
  double control_at(double t) const;
  /// Closed-form integral of u^2 / 2 over the arc.
  double energy() const;
};

/// Piecewise closed-form trajectory over [t0, tf]. Arcs tile the interval and
/// the state is continuous across arc boundaries by construction.
class Trajectory {
 public:
  class Builder {
   public:
    Builder(double t0, VehicleState s0);
    Builder& affine(double duration, double u0, double jerk = 0.0);
    Builder& headway(double duration, double v_target, double tau_c);
    double time() const { return t_; }
    VehicleState state() const { return s_; }
    Trajectory build() const;

   private:
    double t0_;
    VehicleState s0_;
    double t_;
    VehicleState s_;
    std::vector<Arc> arcs_;
  };

  /// Zero-duration trajectory sitting at s0.
  static Trajectory stationary(double t0, VehicleState s0);
  /// Constant-speed trajectory over [t0, tf].
  static Trajectory cruise(double t0, double tf, VehicleState s0);

  double t0() const { return t0_; }
  double tf() const { return tf_; }
  double duration() const { return tf_ - t0_; }
  double energy() const { return energy_; }
  VehicleState start_state() const { return s0_; }
  VehicleState end_state() const;
  std::span<const Arc> arcs() const { return arcs_; }

  /// State at t. Times before t0 are rejected; times after tf extrapolate at
  /// the terminal speed.
  VehicleState state_at(double t) const;
  /// Control at t; zero outside [t0, tf].
  double control_at(double t) const;

  /// Minimum and maximum control over the trajectory (exact per arc).
  std::pair<double, double> control_range() const;
  /// Minimum and maximum speed over the trajectory (exact per arc).
  std::pair<double, double> speed_range() const;

 private:
  Trajectory(double t0, VehicleState s0, std::vector<Arc> arcs);
  const Arc* find_arc(double t) const;

  double t0_ = 0.0;
  double tf_ = 0.0;
  VehicleState s0_;
  std::vector<Arc> arcs_;
  double energy_ = 0.0;
};

}  // namespace lanechange
