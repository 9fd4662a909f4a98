#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "lanechange/ocp.h"
#include "ocp/profile.h"

namespace lanechange::ocp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSafetyTol = 1e-7;

int sign_of(double u, double eps) { return u > eps ? 1 : (u < -eps ? -1 : 0); }

/// Safety slack as a function of the maneuver-relative displacement and speed.
struct RelativeGap {
  double s0;   // x_U(t0) - x_C(t0) - delta
  double vU;
  double phi;
  double at(double tau, double dx, double v) const { return s0 + vU * tau - dx - phi * v; }
};

struct Candidate {
  double energy = kInf;
  detail::Profile profile;
};

double profile_min_slack(const detail::Profile& pr, const RelativeGap& g, double v0, double T,
                         double step = 0.01) {
  // Exact kinematics at each sample via a trajectory in relative coordinates.
  const Trajectory traj = pr.to_trajectory(0.0, {0.0, v0});
  double worst = kInf;
  const int n = static_cast<int>(std::ceil(T / step));
  for (int k = 0; k <= n; ++k) {
    const double tau = std::min(T, k * step);
    const VehicleState s = traj.state_at(tau);
    worst = std::min(worst, g.at(tau, s.x, s.v));
  }
  return worst;
}

/// Cheapest profile over [0, T] from speed v0 that ends exactly on the safety
/// boundary with terminal speed in [lo, hi]. Feasible terminal speeds form an
/// interval; it is located on a grid and its ends refined before the
/// one-dimensional energy minimization.
std::optional<Candidate> boundary_touch(double v0, const RelativeGap& g, double T, double lo,
                                        double hi, const ControlBounds& cb,
                                        const SpeedBounds& sb) {
  lo = std::max(lo, sb.v_min);
  hi = std::min(hi, sb.v_max);
  if (lo > hi || !(T > 0.0)) return std::nullopt;
  auto target = [&](double vf) { return g.s0 + g.vU * T - g.phi * vf; };
  auto violation = [&](double vf) {
    auto range = detail::displacement_range(v0, T, vf, cb, sb);
    if (!range) return kInf;
    const double D = target(vf);
    return std::max(range->first - D, D - range->second);
  };
  auto energy = [&](double vf) {
    auto pr = detail::solve_two_point(v0, T, vf, target(vf), cb, sb);
    return pr ? pr->energy() : kInf;
  };

  constexpr int kGrid = 32;
  std::vector<double> grid(kGrid + 1);
  int first = -1;
  int last = -1;
  for (int k = 0; k <= kGrid; ++k) {
    grid[k] = lo + (hi - lo) * k / kGrid;
    if (violation(grid[k]) <= 0.0) {
      if (first < 0) first = k;
      last = k;
    }
  }
  auto refine = [&](double feasible, double infeasible) {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (feasible + infeasible);
      (violation(mid) <= 0.0 ? feasible : infeasible) = mid;
    }
    return feasible;
  };
  double a = 0.0;
  double b = 0.0;
  if (first < 0) {
    if (hi == lo) return std::nullopt;
    auto r = boost::math::tools::brent_find_minima(violation, lo, hi, 40);
    if (r.second > 1e-9) return std::nullopt;
    a = b = r.first;
  } else {
    a = first > 0 ? refine(grid[first], grid[first - 1]) : grid[first];
    b = last < kGrid ? refine(grid[last], grid[last + 1]) : grid[last];
  }
  double vf = a;
  if (b > a) {
    vf = boost::math::tools::brent_find_minima(energy, a, b, 40).first;
    // Brent never evaluates the interval ends; the optimum often sits there.
    for (double edge : {a, b}) {
      if (energy(edge) <= energy(vf) + 1e-12) vf = edge;
    }
  }
  auto pr = detail::solve_two_point(v0, T, vf, target(vf), cb, sb);
  if (!pr) return std::nullopt;
  return Candidate{pr->energy(), *pr};
}

/// Best of the two structures that are optimal when safety is not active in
/// the interior: constant control to the nearest admissible terminal speed
/// (free terminal position), or a terminal touch of the safety boundary.
std::optional<Candidate> unconstrained_or_touch(double v0, const RelativeGap& g, double T,
                                                double lo, double hi, const ControlBounds& cb,
                                                const SpeedBounds& sb) {
  std::optional<Candidate> best;
  const double vf = std::clamp(v0, lo, hi);
  const double u = (vf - v0) / T;
  if (u < cb.u_min - 1e-12 || u > cb.u_max + 1e-12) return std::nullopt;
  Candidate c;
  c.profile.constant(T, cb.clamp(u));
  c.energy = c.profile.energy();
  if (profile_min_slack(c.profile, g, v0, T) >= -kSafetyTol) return c;
  auto touch = boundary_touch(v0, g, T, lo, hi, cb, sb);
  if (touch && profile_min_slack(touch->profile, g, v0, T) >= -kSafetyTol) return touch;
  return std::nullopt;
}

/// Structure with an interior constraint-following arc: an entry arc meeting
/// the boundary tangentially at t1, the boundary arc on [t1, t2] where
/// u = (v_U - v) / phi, then a terminal arc. Entry and exit times are found by
/// a grid search followed by coordinate-wise refinement.
class BoundaryArcFamily {
 public:
  BoundaryArcFamily(const CavCProblem& p, const RelativeGap& g, double T, double lo, double hi)
      : p_(p), g_(g), T_(T), lo_(lo), hi_(hi) {}

  std::optional<Trajectory> solve() const {
    if (g_.phi < 1e-6) return std::nullopt;
    constexpr int kGrid = 16;
    double best_e = kInf;
    double best_t1 = 0.0;
    double best_t2 = 0.0;
    for (int i = 0; i <= kGrid; ++i) {
      const double t1 = T_ * i / kGrid;
      for (int j = i; j <= kGrid; ++j) {
        const double t2 = T_ * j / kGrid;
        const double e = energy(t1, t2);
        if (e < best_e) {
          best_e = e;
          best_t1 = t1;
          best_t2 = t2;
        }
      }
    }
    if (!std::isfinite(best_e)) return std::nullopt;
    double h = T_ / kGrid;
    for (int round = 0; round < 6; ++round, h *= 0.5) {
      const double t1_lo = std::max(0.0, best_t1 - h);
      const double t1_hi = std::min(best_t2, best_t1 + h);
      if (t1_hi > t1_lo) {
        auto r = boost::math::tools::brent_find_minima(
            [&](double t1) { return energy(t1, best_t2); }, t1_lo, t1_hi, 30);
        if (r.second < best_e) std::tie(best_t1, best_e) = r;
      }
      const double t2_lo = std::max(best_t1, best_t2 - h);
      const double t2_hi = std::min(T_, best_t2 + h);
      if (t2_hi > t2_lo) {
        auto r = boost::math::tools::brent_find_minima(
            [&](double t2) { return energy(best_t1, t2); }, t2_lo, t2_hi, 30);
        if (r.second < best_e) std::tie(best_t2, best_e) = r;
      }
    }
    return build(best_t1, best_t2);
  }

 private:
  /// Entry arc over [0, t1]: affine control meeting the boundary with zero
  /// slack rate, so the control is continuous into the boundary arc.
  std::optional<detail::Profile> entry(double t1) const {
    const double v0 = p_.c0.v;
    const double phi = g_.phi;
    detail::Profile pr;
    const double slack0 = g_.s0 - phi * v0;
    if (t1 <= 1e-9) {
      if (slack0 > 1e-7) return std::nullopt;
      return pr;
    }
    Eigen::Matrix2d M;
    M << t1 * t1 / 2.0 + phi * t1, t1 * t1 * t1 / 6.0 + phi * t1 * t1 / 2.0, 1.0 + t1 / phi,
        t1 + t1 * t1 / (2.0 * phi);
    const Eigen::Vector2d rhs(slack0 + (g_.vU - v0) * t1, (g_.vU - v0) / phi);
    const Eigen::Vector2d ab = M.partialPivLu().solve(rhs);
    pr.affine(t1, ab(0), ab(1));
    const auto [umin, umax] = pr.control_range();
    const auto [vmin, vmax] = pr.speed_range(v0);
    if (umin >= p_.bounds.u_min - 1e-9 && umax <= p_.bounds.u_max + 1e-9 &&
        vmin >= p_.speeds.v_min - 1e-9 && vmax <= p_.speeds.v_max + 1e-9) {
      return pr;
    }
    // Saturated entry: cheapest arrival on the boundary at t1.
    auto touch = boundary_touch(v0, g_, t1, p_.speeds.v_min, p_.speeds.v_max, p_.bounds,
                                p_.speeds);
    if (!touch) return std::nullopt;
    return touch->profile;
  }

  /// Exit arc leaving the boundary with continuous control u = (v_U - v2) / phi
  /// and affine thereafter; its slope is fixed either by a terminal touch or by
  /// an edge of the terminal speed box. Returns the cheapest admissible one.
  std::optional<Candidate> exit_arc(double v2, const RelativeGap& g3, double T3) const {
    const double c = (g_.vU - v2) / g_.phi;
    const double phi = g_.phi;
    std::optional<Candidate> best;
    auto offer = [&](double e) {
      Candidate cand;
      cand.profile.affine(T3, c, e);
      const double vf = cand.profile.kinematics(v2).first;
      if (vf < lo_ - 1e-9 || vf > hi_ + 1e-9) return;
      const auto [umin, umax] = cand.profile.control_range();
      const auto [vmin, vmax] = cand.profile.speed_range(v2);
      if (umin < p_.bounds.u_min - 1e-9 || umax > p_.bounds.u_max + 1e-9 ||
          vmin < p_.speeds.v_min - 1e-9 || vmax > p_.speeds.v_max + 1e-9) {
        return;
      }
      if (profile_min_slack(cand.profile, g3, v2, T3) < -kSafetyTol) return;
      cand.energy = cand.profile.energy();
      if (!best || cand.energy < best->energy) best = cand;
    };
    // Terminal touch: slack(T3) = 0 is linear in the slope e.
    const double T2 = T3 * T3;
    const double base = g3.s0 + g_.vU * T3 - (v2 * T3 + c * T2 / 2.0) - phi * (v2 + c * T3);
    const double per_e = T2 * T3 / 6.0 + phi * T2 / 2.0;
    offer(base / per_e);
    for (double edge : {lo_, hi_}) offer(2.0 * (edge - v2 - c * T3) / T2);
    return best;
  }

  struct Pieces {
    detail::Profile entry;
    double v1 = 0.0;
    double v2 = 0.0;
    double boundary_duration = 0.0;
    detail::Profile exit;
    double energy = kInf;
  };

  std::optional<Pieces> pieces(double t1, double t2) const {
    if (t1 < 0.0 || t2 < t1 || t2 > T_ + 1e-12) return std::nullopt;
    Pieces out;
    auto en = entry(t1);
    if (!en) return std::nullopt;
    out.entry = *en;
    out.v1 = en->kinematics(p_.c0.v).first;
    const double phi = g_.phi;
    const double L = t2 - t1;
    const double u_start = (g_.vU - out.v1) / phi;
    if (u_start < p_.bounds.u_min - 1e-9 || u_start > p_.bounds.u_max + 1e-9) return std::nullopt;
    out.v2 = g_.vU + (out.v1 - g_.vU) * std::exp(-L / phi);
    if (std::min(out.v1, out.v2) < p_.speeds.v_min - 1e-9 ||
        std::max(out.v1, out.v2) > p_.speeds.v_max + 1e-9) {
      return std::nullopt;
    }
    out.boundary_duration = L;
    const double dv = out.v1 - g_.vU;
    const double e_boundary = dv * dv / (4.0 * phi) * (1.0 - std::exp(-2.0 * L / phi));
    const double T3 = T_ - t2;
    double e_exit = 0.0;
    if (T3 <= 1e-9) {
      if (out.v2 < lo_ - 1e-9 || out.v2 > hi_ + 1e-9) return std::nullopt;
    } else {
      // Exit on the boundary: zero slack at the exit point.
      const RelativeGap g3{phi * out.v2, g_.vU, phi};
      auto ex = exit_arc(out.v2, g3, T3);
      if (!ex) ex = unconstrained_or_touch(out.v2, g3, T3, lo_, hi_, p_.bounds, p_.speeds);
      if (!ex) return std::nullopt;
      out.exit = ex->profile;
      e_exit = ex->energy;
    }
    out.energy = out.entry.energy() + e_boundary + e_exit;
    return out;
  }

  double energy(double t1, double t2) const {
    auto pc = pieces(t1, t2);
    if (!pc) return kInf;
    // The entry arc must itself keep safety before reaching the boundary.
    if (t1 > 1e-9 && profile_min_slack(pc->entry, g_, p_.c0.v, t1) < -kSafetyTol) return kInf;
    return pc->energy;
  }

  std::optional<Trajectory> build(double t1, double t2) const {
    auto pc = pieces(t1, t2);
    if (!pc) return std::nullopt;
    Trajectory::Builder b(p_.t0, p_.c0);
    for (const detail::Segment& s : pc->entry.segments()) b.affine(s.duration, s.u0, s.jerk);
    b.headway(pc->boundary_duration, g_.vU, g_.phi);
    for (const detail::Segment& s : pc->exit.segments()) b.affine(s.duration, s.u0, s.jerk);
    return b.build();
  }

  const CavCProblem& p_;
  const RelativeGap& g_;
  double T_;
  double lo_;
  double hi_;
};

double terminal_speed_lower_time(const CavCProblem& p) {
  const double v0 = p.c0.v;
  if (v0 < p.v_lo) return (p.v_lo - v0) / p.bounds.u_max;
  if (v0 > p.v_hi) return (v0 - p.v_hi) / -p.bounds.u_min;
  return 0.0;
}

}  // namespace

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::kAccelOnly: return "accel_only";
    case Shape::kDecelThenAccel: return "decel_then_accel";
    case Shape::kDecelOnly: return "decel_only";
    case Shape::kCruise: return "cruise";
    case Shape::kOther: return "other";
    case Shape::kDegenerateZeroTime: return "degenerate_zero_time";
  }
  return "other";
}

Shape classify_shape(const Trajectory& traj, double eps) {
  if (traj.duration() <= 0.0) return Shape::kDegenerateZeroTime;
  // Collapse the control into a sequence of signs, ignoring zero stretches.
  std::vector<int> signs;
  auto push = [&](int s) {
    if (s != 0 && (signs.empty() || signs.back() != s)) signs.push_back(s);
  };
  for (const Arc& a : traj.arcs()) {
    const double u_start = a.control_at(a.t_start);
    const double u_end = a.control_at(a.t_end);
    push(sign_of(u_start, eps));
    if (a.kind == Arc::Kind::kAffine && sign_of(u_start, eps) * sign_of(u_end, eps) < 0) {
      push(sign_of(u_end, eps));
    }
    push(sign_of(u_end, eps));
  }
  if (signs.empty()) return Shape::kCruise;
  if (signs == std::vector<int>{1}) return Shape::kAccelOnly;
  if (signs == std::vector<int>{-1}) return Shape::kDecelOnly;
  if (signs == std::vector<int>{-1, 1}) return Shape::kDecelThenAccel;
  return Shape::kOther;
}

bool has_interior_coast(const Trajectory& traj, double min_duration, double eps) {
  const auto arcs = traj.arcs();
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    const Arc& a = arcs[k];
    const bool zero = a.kind == Arc::Kind::kAffine && std::abs(a.u0) <= eps &&
                      std::abs(a.jerk) <= eps;
    if (!zero || a.duration() < min_duration) continue;
    bool decel_before = false;
    bool accel_after = false;
    for (std::size_t j = 0; j < k; ++j) {
      decel_before |= arcs[j].control_at(arcs[j].t_start) < -eps ||
                      arcs[j].control_at(arcs[j].t_end) < -eps;
    }
    for (std::size_t j = k + 1; j < arcs.size(); ++j) {
      accel_after |= arcs[j].control_at(arcs[j].t_start) > eps ||
                     arcs[j].control_at(arcs[j].t_end) > eps;
    }
    if (decel_before && accel_after) return true;
  }
  return false;
}

CavCProblem CavCProblem::make(VehicleState c0, VehicleState u0, double t0,
                              const ManeuverParams& mp, const ControlBounds& bounds,
                              const SpeedBounds& speeds, const SafetyParams& safety) {
  CavCProblem p;
  p.c0 = c0;
  p.u0 = u0;
  p.t0 = t0;
  p.v_lo = mp.v_terminal_lo();
  p.v_hi = mp.v_terminal_hi();
  p.bounds = bounds;
  p.speeds = speeds;
  p.safety = safety;
  return p;
}

double CavCProblem::safety_slack(VehicleState c, double t) const {
  return u0.x + u0.v * (t - t0) - c.x - (safety.delta + safety.phi * c.v);
}

double CavCProblem::min_safety_slack(const Trajectory& traj, double step) const {
  double worst = kInf;
  const double T = traj.duration();
  const int n = static_cast<int>(std::ceil(T / step));
  for (int k = 0; k <= n; ++k) {
    const double t = traj.t0() + std::min(T, k * step);
    worst = std::min(worst, safety_slack(traj.state_at(t), t));
  }
  return worst;
}

void CavCProblem::validate() const {
  bounds.validate();
  speeds.validate();
  safety.validate();
  if (!std::isfinite(c0.x) || !std::isfinite(c0.v) || !std::isfinite(u0.x) ||
      !std::isfinite(u0.v) || !std::isfinite(t0)) {
    throw std::invalid_argument("CavCProblem: non-finite state");
  }
  if (!(v_lo <= v_hi)) throw std::invalid_argument("CavCProblem: empty terminal speed box");
  if (u0.v < 0.0) throw std::invalid_argument("CavCProblem: U must not move backwards");
}

Result<FixedTimeSolution> min_energy_fixed_time(const CavCProblem& p, double tf) {
  p.validate();
  if (!(tf > p.t0)) throw std::invalid_argument("min_energy_fixed_time: tf must exceed t0");
  const double v0 = p.c0.v;
  if (v0 < p.speeds.v_min - 1e-9 || v0 > p.speeds.v_max + 1e-9) {
    return Failure{FailureKind::kInvalidInput, "initial speed of C outside the speed box", {}};
  }
  if (p.safety_slack(p.c0, p.t0) < -1e-9) {
    return Failure{FailureKind::kInvalidInput, "initial state of C violates safety", {}};
  }
  const double T = tf - p.t0;
  const RelativeGap g{p.u0.x - p.c0.x - p.safety.delta, p.u0.v, p.safety.phi};
  const double v_lo = std::max(p.v_lo, p.speeds.v_min);
  const double v_hi = std::min(p.v_hi, p.speeds.v_max);
  if (v_lo > v_hi) return infeasible("terminal speed box lies outside the speed bounds");

  const double u_needed = (std::clamp(v0, v_lo, v_hi) - v0) / T;
  if (u_needed < p.bounds.u_min - 1e-12 || u_needed > p.bounds.u_max + 1e-12) {
    return infeasible("terminal speed box unreachable within the horizon");
  }
  // Relaxations first: if either keeps safety everywhere it is optimal.
  if (auto c = unconstrained_or_touch(v0, g, T, v_lo, v_hi, p.bounds, p.speeds)) {
    return FixedTimeSolution{c->energy, c->profile.to_trajectory(p.t0, p.c0)};
  }
  // Necessary condition: some admissible terminal speed must leave C behind
  // the safety line at T even with the least possible displacement.
  bool reachable = false;
  constexpr int kProbe = 64;
  for (int k = 0; k <= kProbe && !reachable; ++k) {
    const double vf = v_lo + (v_hi - v_lo) * k / kProbe;
    auto range = detail::displacement_range(v0, T, vf, p.bounds, p.speeds);
    reachable = range && range->first <= g.s0 + g.vU * T - g.phi * vf + 1e-9;
  }
  if (!reachable) return infeasible("C cannot fall behind the safety line by the horizon end");
  if (auto traj = BoundaryArcFamily(p, g, T, v_lo, v_hi).solve()) {
    if (p.min_safety_slack(*traj) >= -kSafetyTol) {
      const double e = traj->energy();
      return FixedTimeSolution{e, *std::move(traj)};
    }
  }
  return infeasible("no admissible trajectory keeps safety and meets the speed box");
}

double free_time_objective(const CavCProblem& p, double beta, double T_th, double tf) {
  const double T = tf - p.t0;
  if (!(T > 0.0) || T > T_th + 1e-12) return kInf;
  auto sol = min_energy_fixed_time(p, tf);
  if (!sol) return kInf;
  return beta * T + sol->energy;
}

Result<double> min_feasible_duration(const CavCProblem& p, double T_max, double tolerance) {
  p.validate();
  if (!(T_max > 0.0)) throw std::invalid_argument("min_feasible_duration: T_max must be positive");
  auto feasible = [&](double T) { return min_energy_fixed_time(p, p.t0 + T).ok(); };
  const double t_lb = std::max(terminal_speed_lower_time(p), tolerance);
  if (t_lb > T_max) return infeasible("speed box not reachable within the limit");
  // Coarse scan for the first feasible duration, then bisection.
  const double step = std::max(tolerance, std::min(0.05, T_max / 64.0));
  double prev = t_lb;
  if (feasible(t_lb)) return t_lb;
  for (double T = t_lb + step;; T += step) {
    const double Tc = std::min(T, T_max);
    if (feasible(Tc)) {
      double lo = prev;
      double hi = Tc;
      while (hi - lo > tolerance) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
      }
      return hi;
    }
    prev = Tc;
    if (Tc >= T_max) break;
  }
  return infeasible("no feasible duration up to the limit");
}

Result<CavCSolution> solve_cav_c_free_time(const CavCProblem& p, double beta, double T_th,
                                           FreeTimeOptions opts) {
  p.validate();
  if (!(beta >= 0.0)) throw std::invalid_argument("solve_cav_c_free_time: beta must be >= 0");
  if (!(T_th > 0.0)) throw std::invalid_argument("solve_cav_c_free_time: T_th must be positive");
  const double v0 = p.c0.v;
  if (v0 < p.speeds.v_min - 1e-9 || v0 > p.speeds.v_max + 1e-9) {
    return Failure{FailureKind::kInvalidInput, "initial speed of C outside the speed box", {}};
  }
  const double slack0 = p.safety_slack(p.c0, p.t0);
  if (slack0 < -1e-9) {
    return Failure{FailureKind::kInvalidInput, "initial state of C violates safety", {}};
  }
  if (v0 >= p.v_lo && v0 <= p.v_hi && slack0 > 0.0) {
    CavCSolution s;
    s.tf_star = p.t0;
    s.traj = Trajectory::stationary(p.t0, p.c0);
    s.terminal_speed = v0;
    s.shape = Shape::kDegenerateZeroTime;
    return s;
  }

  auto g = [&](double T) { return free_time_objective(p, beta, T_th, p.t0 + T); };
  const double t_lb = std::max(terminal_speed_lower_time(p), 1e-6);
  if (t_lb > T_th) {
    return infeasible("speed box not reachable within T_th", t_lb);
  }

  // Coarse scan; g may be non-unimodal, so refine around the best grid point.
  std::vector<double> Ts;
  for (double T = t_lb; T < T_th; T += opts.grid_step) Ts.push_back(T);
  Ts.push_back(T_th);
  std::vector<double> gs(Ts.size());
  std::size_t arg = Ts.size();
  for (std::size_t k = 0; k < Ts.size(); ++k) {
    gs[k] = g(Ts[k]);
    if (std::isfinite(gs[k]) && (arg == Ts.size() || gs[k] < gs[arg])) arg = k;
  }
  if (arg == Ts.size()) {
    // Look for a narrow feasible window the grid stepped over, then report
    // the first feasible duration past T_th as a diagnostic.
    auto fine = min_feasible_duration(p, T_th, opts.tolerance);
    if (fine) {
      Ts = {*fine};
      gs = {g(*fine)};
      arg = 0;
    } else {
      auto beyond = min_feasible_duration(p, 4.0 * T_th, opts.tolerance);
      return infeasible("no feasible maneuver within T_th",
                        beyond ? std::optional<double>(*beyond) : std::nullopt);
    }
  }

  double lo = arg > 0 ? Ts[arg - 1] : Ts[arg];
  double hi = arg + 1 < Ts.size() ? Ts[arg + 1] : Ts[arg];
  if (arg > 0 && !std::isfinite(gs[arg - 1])) {
    // Left neighbour infeasible: the minimum may sit on the feasibility edge.
    double a = Ts[arg - 1];
    double b = Ts[arg];
    while (b - a > opts.tolerance * 1e-2) {
      const double mid = 0.5 * (a + b);
      (std::isfinite(g(mid)) ? b : a) = mid;
    }
    lo = b;
  }
  double best_T = Ts[arg];
  double best_g = gs[arg];
  if (hi > lo) {
    int bits = static_cast<int>(std::ceil(-std::log2(opts.tolerance * 1e-2 / (hi - lo)))) + 2;
    bits = std::clamp(bits, 8, 52);
    auto r = boost::math::tools::brent_find_minima(g, lo, hi, bits);
    for (auto [T, val] : {std::pair{r.first, r.second}, std::pair{lo, g(lo)}, std::pair{hi, g(hi)}}) {
      if (val < best_g) {
        best_g = val;
        best_T = T;
      }
    }
  }

  auto sol = min_energy_fixed_time(p, p.t0 + best_T);
  if (!sol) return sol.failure();
  CavCSolution s;
  s.tf_star = p.t0 + best_T;
  s.traj = sol->traj;
  s.energy = sol->energy;
  s.cost = beta * best_T + sol->energy;
  s.terminal_speed = s.traj.end_state().v;
  s.shape = classify_shape(s.traj);
  return s;
}

}  // namespace lanechange::ocp
