// Kinematic building blocks shared by the OCP solvers. Not part of the public
// interface: everything here works in coordinates relative to the maneuver
// start (tau = t - t0, displacement measured from the start position).
#pragma once

#include <optional>
#include <span>
#include <utility>

#include <boost/container/static_vector.hpp>

#include "lanechange/core.h"
#include "lanechange/trajectory.h"

namespace lanechange::ocp::detail {

/// u(tau) = u0 + jerk * tau over `duration` seconds.
struct Segment {
  double duration = 0.0;
  double u0 = 0.0;
  double jerk = 0.0;
};

/// Piecewise-affine control profile with inline storage.
class Profile {
 public:
  void affine(double duration, double u0, double jerk);
  void constant(double duration, double u) { affine(duration, u, 0.0); }
  /// u(tau) = clamp(a + b tau, u_min, u_max) on [0, duration].
  void saturated_affine(double duration, double a, double b, const ControlBounds& cb);
  /// Changes the speed by `delta_v` with a control whose magnitude ramps at
  /// rate `ramp` and saturates at `sat_mag`. When `approach` is set the
  /// control ends at zero (saturated part first), otherwise it starts at zero.
  void ramp_phase(double delta_v, double ramp, double sat_mag, bool approach);
  void append(const Profile& other);

  double duration() const;
  double energy() const;
  /// (terminal speed, displacement) when started at speed v0.
  std::pair<double, double> kinematics(double v0) const;
  std::pair<double, double> speed_range(double v0) const;
  std::pair<double, double> control_range() const;
  Trajectory to_trajectory(double t0, VehicleState s0) const;
  std::span<const Segment> segments() const { return {segs_.data(), segs_.size()}; }

 private:
  boost::container::static_vector<Segment, 16> segs_;
};

/// Reachable displacement range at T for a fixed terminal speed vf, or
/// nullopt when vf itself is unreachable (or v0, vf violate the speed box).
std::optional<std::pair<double, double>> displacement_range(double v0, double T, double vf,
                                                            const ControlBounds& cb,
                                                            const SpeedBounds& sb);

/// Minimum-energy profile over [0, T] from speed v0 to terminal speed vf with
/// displacement D, under control and speed bounds.
std::optional<Profile> solve_two_point(double v0, double T, double vf, double D,
                                       const ControlBounds& cb, const SpeedBounds& sb);

/// Minimum-energy profile over [0, T] from speed v0 with displacement D and
/// free terminal speed.
std::optional<Profile> solve_free_speed_endpoint(double v0, double T, double D,
                                                 const ControlBounds& cb, const SpeedBounds& sb);

/// Extreme displacements over [0, T] with free terminal speed (bang then hold).
std::pair<double, double> free_speed_displacement_range(double v0, double T,
                                                        const ControlBounds& cb,
                                                        const SpeedBounds& sb);

}  // namespace lanechange::ocp::detail
