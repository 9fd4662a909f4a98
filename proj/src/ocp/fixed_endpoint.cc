#include <stdexcept>

#include "lanechange/ocp.h"
#include "ocp/profile.h"

namespace lanechange::ocp {

TerminalInterval feasible_terminal_interval(VehicleState s, double t0, double tf,
                                            const ControlBounds& bounds,
                                            const SpeedBounds& speeds) {
  if (tf < t0) throw std::invalid_argument("feasible_terminal_interval: tf precedes t0");
  const double T = tf - t0;
  if (T == 0.0) return {s.x, s.x};
  const auto [d_lo, d_hi] = detail::free_speed_displacement_range(s.v, T, bounds, speeds);
  return {s.x + d_lo, s.x + d_hi};
}

Result<Trajectory> solve_energy_fixed_endpoint(VehicleState s, double t0, double tf, double xf,
                                               const ControlBounds& bounds,
                                               const SpeedBounds& speeds) {
  bounds.validate();
  speeds.validate();
  if (!(tf > t0)) throw std::invalid_argument("solve_energy_fixed_endpoint: tf must exceed t0");
  const TerminalInterval box = feasible_terminal_interval(s, t0, tf, bounds, speeds);
  if (!box.contains(xf, 1e-6)) {
    return Failure{FailureKind::kUnreachable, "target position outside the reachable interval",
                   xf < box.x_lo ? box.x_lo - xf : xf - box.x_hi};
  }
  auto pr = detail::solve_free_speed_endpoint(s.v, tf - t0, xf - s.x, bounds, speeds);
  if (!pr) return infeasible("no admissible control reaches the target position");
  return pr->to_trajectory(t0, s);
}

}  // namespace lanechange::ocp
