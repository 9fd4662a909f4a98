#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lanechange/core.h"

namespace lanechange::coop {

/// A fast-lane vehicle as seen at maneuver start.
struct FastLaneVehicle {
  int id = 0;
  VehicleState state;
  SafetyParams safety;
};

/// Fast-lane CAVs whose terminal positions can matter for the merge, ordered
/// front to rear by position at t0.
struct CooperativeSet {
  std::vector<FastLaneVehicle> members;
  double t_f_star = 0.0;

  bool contains(int id) const;
};

/// Members are the vehicles whose constant-speed projection to tf lies in
/// [xC_tf - L_r, xU_tf + L_f]. `fast_lane` must be sorted front to rear.
CooperativeSet build_cooperative_set(std::span<const FastLaneVehicle> fast_lane, double xU_tf,
                                     double xC_tf, double t0, double tf, double L_f, double L_r);

/// Same window, but a vehicle qualifies when any position it can reach by tf
/// (full braking or full acceleration extremals) falls inside the window.
CooperativeSet build_cooperative_set_minmax(std::span<const FastLaneVehicle> fast_lane,
                                            double xU_tf, double xC_tf, double t0, double tf,
                                            double L_f, double L_r, const ControlBounds& bounds,
                                            const SpeedBounds& speeds);

/// gamma * delta_i^2 + (1 - gamma) * delta_i1^2.
double disruption_metric(double delta_i, double delta_i1, double gamma);

/// One side of a merge slot. A cooperating vehicle's terminal position is a
/// decision variable; a non-cooperating one keeps its constant-speed
/// projection.
struct SlotVehicle {
  FastLaneVehicle vehicle;
  bool cooperating = true;
};

/// Inputs of the terminal-position QP for one merge slot (i ahead of C,
/// i+1 behind). Either side may be absent when the slot is at the end of the
/// fast lane; an absent vehicle contributes no constraint and no disruption.
struct PairQpInput {
  std::optional<SlotVehicle> i;
  std::optional<SlotVehicle> i1;
  /// Vehicle ahead of i; nullopt means none within reach (the +1000 m virtual
  /// leader, which never binds).
  std::optional<VehicleState> leader;
  double xC_tf = 0.0;
  double vC_tf = 0.0;
  SafetyParams safety_C;
  double t0 = 0.0;
  double tf = 0.0;
  double gamma = 0.5;
  ControlBounds bounds;
  SpeedBounds speeds;
};

struct PairSolution {
  std::optional<int> i_id;
  std::optional<int> i1_id;
  double x_i_f = 0.0;
  double x_i1_f = 0.0;
  double delta_i = 0.0;
  double delta_i1 = 0.0;
  double d_star = 0.0;
  bool feasible = false;
  /// Name of the most violated constraint when infeasible.
  std::string violated;
  double violation = 0.0;
};

/// Minimizes the weighted squared shortfall of the terminal positions of i
/// and i+1 versus their constant-speed projections subject to the merge gaps,
/// the gap to i's leader and the reachable terminal intervals. Solved exactly
/// by enumerating active sets of the two-variable problem.
PairSolution pair_terminal_qp(const PairQpInput& in);

/// Index of the feasible solution with the smallest d_star <= D_th; ties go
/// to the earliest (front-most) entry. `solutions` must be ordered front to
/// rear.
std::optional<std::size_t> select_optimal_pair(std::span<const PairSolution> solutions,
                                               double D_th);

}  // namespace lanechange::coop
