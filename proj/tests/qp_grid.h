#pragma once

// Brute-force reference for the pair terminal-position QP: scans a uniform
// grid over both reachable intervals, recomputed here from plain kinematics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "lanechange/cooperation.h"

namespace lanechange::testing {

struct Interval {
  double lo, hi;
};

inline Interval reach(const coop::SlotVehicle& sv, const coop::PairQpInput& in) {
  const double T = in.tf - in.t0;
  const VehicleState s = sv.vehicle.state;
  if (!sv.cooperating) {
    const double x = s.x + s.v * T;
    return {x, x};
  }
  auto pos = [&](double u, double v_cap) {
    const double t_sat = std::min(T, (v_cap - s.v) / u);
    return s.x + s.v * t_sat + 0.5 * u * t_sat * t_sat + v_cap * (T - t_sat);
  };
  return {pos(in.bounds.u_min, in.speeds.v_min), pos(in.bounds.u_max, in.speeds.v_max)};
}

struct GridResult {
  std::optional<double> d_min;
  double max_abs_delta = 0.0;  // at the grid minimizer
};

inline GridResult grid_minimum(const coop::PairQpInput& in, double h) {
  const double T = in.tf - in.t0;
  auto d = [](double v, const SafetyParams& p) { return p.delta + p.phi * v; };
  Interval ri{0, 0}, r1{0, 0};
  double ti = 0, t1 = 0;
  if (in.i) {
    ri = reach(*in.i, in);
    ti = in.i->vehicle.state.x + in.i->vehicle.state.v * T;
    ri.lo = std::max(ri.lo, in.xC_tf + d(in.vC_tf, in.safety_C));
    if (in.leader) {
      const double vmax = std::min(in.i->vehicle.state.v + in.bounds.u_max * T, in.speeds.v_max);
      ri.hi = std::min(ri.hi, in.leader->x + in.leader->v * T - d(vmax, in.i->vehicle.safety));
    }
  }
  if (in.i1) {
    r1 = reach(*in.i1, in);
    t1 = in.i1->vehicle.state.x + in.i1->vehicle.state.v * T;
    r1.hi = std::min(r1.hi, in.xC_tf - d(in.i1->vehicle.state.v, in.i1->vehicle.safety));
  }
  GridResult out;
  if ((in.i && ri.lo > ri.hi) || (in.i1 && r1.lo > r1.hi)) return out;
  // Grid anchored at the interval start; the upper end is always included.
  auto points = [h](Interval r) {
    std::vector<double> xs;
    for (double x = r.lo; x < r.hi; x += h) xs.push_back(x);
    xs.push_back(r.hi);
    return xs;
  };
  const std::vector<double> xi = in.i ? points(ri) : std::vector<double>{0.0};
  const std::vector<double> x1 = in.i1 ? points(r1) : std::vector<double>{0.0};
  // The objective is separable, so the minimum is the sum of per-axis minima.
  double best_i = in.i ? std::numeric_limits<double>::infinity() : 0.0, di = 0;
  for (double x : xi) {
    if (!in.i) break;
    const double v = in.gamma * (ti - x) * (ti - x);
    if (v < best_i) best_i = v, di = ti - x;
  }
  double best_1 = in.i1 ? std::numeric_limits<double>::infinity() : 0.0, d1 = 0;
  for (double x : x1) {
    if (!in.i1) break;
    const double v = (1 - in.gamma) * (t1 - x) * (t1 - x);
    if (v < best_1) best_1 = v, d1 = t1 - x;
  }
  out.d_min = best_i + best_1;
  out.max_abs_delta = std::max(std::abs(di), std::abs(d1));
  return out;
}

/// Random slot around C's terminal position: i ahead, i+1 behind, optional
/// leader ahead of i, mixed cooperation flags.
inline coop::PairQpInput random_pair_instance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  coop::PairQpInput in;
  in.t0 = 0.0;
  in.tf = 1.0 + 11.0 * u(rng);
  in.gamma = u(rng) < 0.2 ? 0.01 : u(rng);
  in.vC_tf = 27.0 + 4.0 * u(rng);
  in.safety_C = {6.5, 0.5 + 0.2 * u(rng)};
  in.xC_tf = 300.0;
  const double T = in.tf - in.t0;
  auto make = [&](int id, double x_at_tf) {
    const double v = 18.0 + 13.0 * u(rng);
    coop::SlotVehicle sv;
    sv.vehicle.id = id;
    sv.vehicle.state = {x_at_tf - v * T, v};
    sv.vehicle.safety = {6.5, 0.5 + 0.2 * u(rng)};
    sv.cooperating = u(rng) < 0.85;
    return sv;
  };
  if (u(rng) < 0.9) in.i = make(1, in.xC_tf + 60.0 * u(rng) - 10.0);
  if (u(rng) < 0.9) in.i1 = make(2, in.xC_tf - 60.0 * u(rng) + 10.0);
  if (in.i && u(rng) < 0.7) {
    const double v = 18.0 + 13.0 * u(rng);
    const double x_tf = in.i->vehicle.state.x + in.i->vehicle.state.v * T + 5.0 + 50.0 * u(rng);
    in.leader = VehicleState{x_tf - v * T, v};
  }
  return in;
}

}  // namespace lanechange::testing
