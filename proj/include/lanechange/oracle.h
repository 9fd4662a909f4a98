#pragma once

#include <vector>

#include "lanechange/core.h"
#include "lanechange/ocp.h"

namespace lanechange::oracle {

/// Piecewise-constant control on a uniform grid, solved as a dense QP with
/// exact zero-order-hold kinematics. Independent of the analytic solvers and
/// meant for verification only.
struct OracleSolution {
  double energy = 0.0;
  double dt = 0.0;
  std::vector<double> controls;
  std::vector<VehicleState> states;  // grid states, states[0] is the start
};

/// Fixed terminal time and position, free terminal speed.
Result<OracleSolution> fixed_endpoint(VehicleState s, double T, double xf,
                                      const ControlBounds& bounds, const SpeedBounds& speeds,
                                      double dt = 0.05);

/// CAV C over the fixed horizon [t0, tf]: terminal speed box, safety against U
/// at every grid point.
Result<OracleSolution> cav_c_fixed_time(const ocp::CavCProblem& p, double tf, double dt = 0.05);

}  // namespace lanechange::oracle
