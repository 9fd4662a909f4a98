#include "ocp/profile.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>

namespace lanechange::ocp::detail {
namespace {

constexpr double kSpeedTol = 1e-9;

double rel_tol(double x) { return 1e-9 * std::max(1.0, std::abs(x)); }

/// Root of a monotone scalar function on [lo, hi]; nullopt when the ends do
/// not bracket a sign change.
template <typename F>
std::optional<double> find_root(F&& f, double lo, double hi) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) return std::nullopt;
  std::uintmax_t max_iter = 200;
  auto tol = [](double a, double b) {
    return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                  std::max(std::abs(a), std::abs(b));
  };
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, max_iter);
  return 0.5 * (r.first + r.second);
}

/// Doubles `start` (> 0) until pred(x) holds; nullopt after `limit` tries.
template <typename P>
std::optional<double> expand_until(P&& pred, double start, int limit = 90) {
  double x = start;
  for (int i = 0; i < limit; ++i, x *= 2.0) {
    if (pred(x)) return x;
  }
  return std::nullopt;
}

bool within_bounds(const Profile& pr, double v0, const ControlBounds& cb, const SpeedBounds& sb) {
  const auto [umin, umax] = pr.control_range();
  const auto [vmin, vmax] = pr.speed_range(v0);
  return umin >= cb.u_min - 1e-9 && umax <= cb.u_max + 1e-9 && vmin >= sb.v_min - kSpeedTol &&
         vmax <= sb.v_max + kSpeedTol;
}

double sat_integral(double a, double b, double T, const ControlBounds& cb) {
  Profile pr;
  pr.saturated_affine(T, a, b, cb);
  return pr.kinematics(0.0).first;
}

/// Offset a such that the integral of clamp(a + b tau) over [0, T] is dv.
std::optional<double> solve_offset(double b, double T, double dv, const ControlBounds& cb) {
  if (dv < cb.u_min * T - rel_tol(dv) || dv > cb.u_max * T + rel_tol(dv)) return std::nullopt;
  dv = std::clamp(dv, cb.u_min * T, cb.u_max * T);
  const double lo = cb.u_min - std::abs(b) * T - 1.0;
  const double hi = cb.u_max + std::abs(b) * T + 1.0;
  return find_root([&](double a) { return sat_integral(a, b, T, cb) - dv; }, lo, hi);
}

/// Saturated-affine family u = clamp(a + b tau) meeting v(T) = vf and x(T) = D.
std::optional<Profile> saturated_affine_family(double v0, double T, double vf, double D,
                                               const ControlBounds& cb) {
  auto build = [&](double b) -> std::optional<Profile> {
    auto a = solve_offset(b, T, vf - v0, cb);
    if (!a) return std::nullopt;
    Profile pr;
    pr.saturated_affine(T, *a, b, cb);
    return pr;
  };
  // Displacement decreases monotonically with the slope b.
  auto excess = [&](double b) {
    auto pr = build(b);
    return pr ? pr->kinematics(v0).second - D : std::numeric_limits<double>::quiet_NaN();
  };
  const double e0 = excess(0.0);
  if (std::isnan(e0)) return std::nullopt;
  if (std::abs(e0) <= rel_tol(D) * 1e-3) return build(0.0);
  const double sign = e0 > 0.0 ? 1.0 : -1.0;
  const double scale = (cb.u_max - cb.u_min) / T;
  auto far = expand_until([&](double k) { return sign * excess(sign * k) <= 0.0; }, scale);
  if (!far) return std::nullopt;
  const double lo = sign > 0 ? 0.0 : -*far;
  const double hi = sign > 0 ? *far : 0.0;
  auto b = find_root(excess, lo, hi);
  if (!b) return std::nullopt;
  return build(*b);
}

/// Ramp into a speed bound, coast on it, ramp out to vf. All ramps share the
/// same slope magnitude k (constant position costate).
std::optional<Profile> coast_family(double v0, double T, double vf, double D,
                                    const ControlBounds& cb, const SpeedBounds& sb, bool lower) {
  const double vb = lower ? sb.v_min : sb.v_max;
  const double d1 = vb - v0;
  const double d3 = vf - vb;
  if (lower && (d1 > kSpeedTol || d3 < -kSpeedTol)) return std::nullopt;
  if (!lower && (d1 < -kSpeedTol || d3 > kSpeedTol)) return std::nullopt;
  const double sat1 = lower ? -cb.u_min : cb.u_max;
  const double sat3 = lower ? cb.u_max : -cb.u_min;
  if (std::abs(d1) / sat1 + std::abs(d3) / sat3 > T) return std::nullopt;

  auto phases = [&](double k) {
    Profile p1, p3;
    p1.ramp_phase(d1, k, sat1, true);
    p3.ramp_phase(d3, k, sat3, false);
    return std::make_pair(p1, p3);
  };
  auto ramp_time = [&](double k) {
    auto [p1, p3] = phases(k);
    return p1.duration() + p3.duration();
  };
  auto build = [&](double k) {
    auto [p1, p3] = phases(k);
    Profile pr = p1;
    pr.constant(std::max(0.0, T - p1.duration() - p3.duration()), 0.0);
    pr.append(p3);
    return pr;
  };
  if (std::abs(d1) <= kSpeedTol && std::abs(d3) <= kSpeedTol) {
    Profile pr;
    pr.constant(T, 0.0);
    return pr;
  }
  const double scale = (cb.u_max - cb.u_min) / T;
  // Smallest ramp rate for which ramps fit inside [0, T]: below it there is no coast.
  double k_lo = 0.0;
  {
    auto small = scale;
    while (ramp_time(small) < T && small > 1e-12) small *= 0.5;
    auto big = expand_until([&](double k) { return ramp_time(k) <= T; }, scale);
    if (!big) return std::nullopt;
    auto r = find_root([&](double k) { return ramp_time(k) - T; }, small, *big);
    k_lo = r ? *r : *big;
  }
  auto excess = [&](double k) { return build(k).kinematics(v0).second - D; };
  // Lower bound: displacement falls with k; upper bound: it rises.
  const double s = lower ? 1.0 : -1.0;
  if (s * excess(k_lo) < -rel_tol(D)) return std::nullopt;
  auto far = expand_until([&](double k) { return s * excess(k) <= 0.0; }, std::max(k_lo, scale));
  if (!far) {
    // Target sits at the bang-coast-bang extreme within rounding.
    Profile pr = build(std::max(k_lo, scale) * std::pow(2.0, 80));
    if (std::abs(pr.kinematics(v0).second - D) <= rel_tol(D) * 1e-2) return pr;
    return std::nullopt;
  }
  auto k = find_root(excess, k_lo, *far);
  if (!k) return std::nullopt;
  return build(*k);
}

bool matches(const Profile& pr, double v0, double vf, double D) {
  const auto [v, x] = pr.kinematics(v0);
  return std::abs(v - vf) <= 1e-7 * std::max(1.0, std::abs(vf)) &&
         std::abs(x - D) <= 1e-7 * std::max(1.0, std::abs(D));
}

}  // namespace

void Profile::affine(double duration, double u0, double jerk) {
  if (duration <= 0.0) return;
  segs_.push_back({duration, u0, jerk});
}

void Profile::saturated_affine(double duration, double a, double b, const ControlBounds& cb) {
  if (duration <= 0.0) return;
  if (b == 0.0) {
    constant(duration, cb.clamp(a));
    return;
  }
  const double t_min = (cb.u_min - a) / b;
  const double t_max = (cb.u_max - a) / b;
  const double first = std::clamp(b > 0.0 ? t_min : t_max, 0.0, duration);
  const double second = std::clamp(b > 0.0 ? t_max : t_min, 0.0, duration);
  const double u_first = b > 0.0 ? cb.u_min : cb.u_max;
  const double u_last = b > 0.0 ? cb.u_max : cb.u_min;
  constant(first, u_first);
  affine(second - first, a + b * first, b);
  constant(duration - second, u_last);
}

void Profile::ramp_phase(double delta_v, double ramp, double sat_mag, bool approach) {
  const double m = std::abs(delta_v);
  if (m <= 0.0) return;
  const double s = delta_v > 0.0 ? 1.0 : -1.0;
  const double full_ramp_area = sat_mag * sat_mag / (2.0 * ramp);
  double r = 0.0;
  double hold = 0.0;
  if (m <= full_ramp_area) {
    r = std::sqrt(2.0 * m / ramp);
  } else {
    r = sat_mag / ramp;
    hold = (m - full_ramp_area) / sat_mag;
  }
  if (approach) {
    constant(hold, s * sat_mag);
    affine(r, s * ramp * r, -s * ramp);
  } else {
    affine(r, 0.0, s * ramp);
    constant(hold, s * sat_mag);
  }
}

void Profile::append(const Profile& other) {
  for (const Segment& s : other.segs_) segs_.push_back(s);
}

double Profile::duration() const {
  double d = 0.0;
  for (const Segment& s : segs_) d += s.duration;
  return d;
}

double Profile::energy() const {
  double e = 0.0;
  for (const Segment& s : segs_) {
    const double L = s.duration;
    e += 0.5 * (s.u0 * s.u0 * L + s.u0 * s.jerk * L * L + s.jerk * s.jerk * L * L * L / 3.0);
  }
  return e;
}

std::pair<double, double> Profile::kinematics(double v0) const {
  double v = v0;
  double x = 0.0;
  for (const Segment& s : segs_) {
    const double L = s.duration;
    x += v * L + 0.5 * s.u0 * L * L + s.jerk * L * L * L / 6.0;
    v += s.u0 * L + 0.5 * s.jerk * L * L;
  }
  return {v, x};
}

std::pair<double, double> Profile::speed_range(double v0) const {
  double v = v0;
  double lo = v0;
  double hi = v0;
  for (const Segment& s : segs_) {
    const double L = s.duration;
    if (s.jerk != 0.0) {
      const double tau = -s.u0 / s.jerk;
      if (tau > 0.0 && tau < L) {
        const double ve = v + s.u0 * tau + 0.5 * s.jerk * tau * tau;
        lo = std::min(lo, ve);
        hi = std::max(hi, ve);
      }
    }
    v += s.u0 * L + 0.5 * s.jerk * L * L;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

std::pair<double, double> Profile::control_range() const {
  if (segs_.empty()) return {0.0, 0.0};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Segment& s : segs_) {
    for (double u : {s.u0, s.u0 + s.jerk * s.duration}) {
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
  }
  return {lo, hi};
}

Trajectory Profile::to_trajectory(double t0, VehicleState s0) const {
  Trajectory::Builder b(t0, s0);
  for (const Segment& s : segs_) b.affine(s.duration, s.u0, s.jerk);
  return b.build();
}

std::optional<std::pair<double, double>> displacement_range(double v0, double T, double vf,
                                                            const ControlBounds& cb,
                                                            const SpeedBounds& sb) {
  if (T < 0.0) return std::nullopt;
  if (v0 < sb.v_min - kSpeedTol || v0 > sb.v_max + kSpeedTol) return std::nullopt;
  if (vf < sb.v_min - kSpeedTol || vf > sb.v_max + kSpeedTol) return std::nullopt;
  const double a = cb.u_max;
  const double d = -cb.u_min;
  // Peak speed of accelerate-then-brake and trough speed of brake-then-accelerate.
  const double vp = (T + v0 / a + vf / d) / (1.0 / a + 1.0 / d);
  const double vt = (v0 / d + vf / a - T) / (1.0 / d + 1.0 / a);
  if (vp < std::max(v0, vf) - kSpeedTol || vt > std::min(v0, vf) + kSpeedTol) return std::nullopt;

  double d_max = 0.0;
  if (vp > sb.v_max) {
    const double t_up = (sb.v_max - v0) / a;
    const double t_dn = (sb.v_max - vf) / d;
    d_max = 0.5 * (v0 + sb.v_max) * t_up + sb.v_max * (T - t_up - t_dn) +
            0.5 * (sb.v_max + vf) * t_dn;
  } else {
    const double peak = std::max(vp, std::max(v0, vf));
    d_max = 0.5 * (v0 + peak) * (peak - v0) / a + 0.5 * (peak + vf) * (peak - vf) / d;
  }
  double d_min = 0.0;
  if (vt < sb.v_min) {
    const double t_dn = (v0 - sb.v_min) / d;
    const double t_up = (vf - sb.v_min) / a;
    d_min = 0.5 * (v0 + sb.v_min) * t_dn + sb.v_min * (T - t_dn - t_up) +
            0.5 * (sb.v_min + vf) * t_up;
  } else {
    const double trough = std::min(vt, std::min(v0, vf));
    d_min = 0.5 * (v0 + trough) * (v0 - trough) / d + 0.5 * (trough + vf) * (vf - trough) / a;
  }
  return std::make_pair(d_min, d_max);
}

std::optional<Profile> solve_two_point(double v0, double T, double vf, double D,
                                       const ControlBounds& cb, const SpeedBounds& sb) {
  if (!(T > 0.0)) return std::nullopt;
  const auto range = displacement_range(v0, T, vf, cb, sb);
  if (!range) return std::nullopt;
  if (D < range->first - rel_tol(D) || D > range->second + rel_tol(D)) return std::nullopt;
  D = std::clamp(D, range->first, range->second);

  // Unconstrained optimum: affine control meeting both boundary conditions.
  const double p = vf - v0;
  const double q = D - v0 * T;
  const double b = (6.0 * p * T - 12.0 * q) / (T * T * T);
  const double a = (p - 0.5 * b * T * T) / T;
  Profile free;
  free.affine(T, a, b);
  if (within_bounds(free, v0, cb, sb)) return free;

  auto sat = saturated_affine_family(v0, T, vf, D, cb);
  if (sat && within_bounds(*sat, v0, cb, sb) && matches(*sat, v0, vf, D)) return sat;

  // A speed bound is active: try coasting on whichever bound the saturated
  // solution crossed first, then the other.
  bool lower_first = true;
  if (sat) {
    const auto [lo, hi] = sat->speed_range(v0);
    lower_first = (sb.v_min - lo) >= (hi - sb.v_max);
  } else {
    lower_first = D < 0.5 * (range->first + range->second);
  }
  for (bool lower : {lower_first, !lower_first}) {
    auto c = coast_family(v0, T, vf, D, cb, sb, lower);
    if (c && within_bounds(*c, v0, cb, sb) && matches(*c, v0, vf, D)) return c;
  }
  return std::nullopt;
}

std::pair<double, double> free_speed_displacement_range(double v0, double T,
                                                        const ControlBounds& cb,
                                                        const SpeedBounds& sb) {
  auto extreme = [&](double u, double v_bound) {
    const double t_ramp = (v_bound - v0) / u;
    if (t_ramp <= 0.0) return v0 * T;
    if (t_ramp >= T) return v0 * T + 0.5 * u * T * T;
    return 0.5 * (v0 + v_bound) * t_ramp + v_bound * (T - t_ramp);
  };
  return {extreme(cb.u_min, sb.v_min), extreme(cb.u_max, sb.v_max)};
}

std::optional<Profile> solve_free_speed_endpoint(double v0, double T, double D,
                                                 const ControlBounds& cb, const SpeedBounds& sb) {
  if (!(T > 0.0)) return std::nullopt;
  if (v0 < sb.v_min - kSpeedTol || v0 > sb.v_max + kSpeedTol) return std::nullopt;
  const auto [d_lo, d_hi] = free_speed_displacement_range(v0, T, cb, sb);
  if (D < d_lo - rel_tol(D) || D > d_hi + rel_tol(D)) return std::nullopt;
  D = std::clamp(D, d_lo, d_hi);

  // Terminal speed free => the speed costate vanishes at T and the
  // unconstrained control is u = lambda (tau - T).
  const double lambda = 3.0 * (v0 * T - D) / (T * T * T);
  Profile free;
  free.affine(T, -lambda * T, lambda);
  if (within_bounds(free, v0, cb, sb)) return free;

  auto build_sat = [&](double c) {
    Profile pr;
    pr.saturated_affine(T, -c * T, c, cb);
    return pr;
  };
  auto excess_sat = [&](double c) { return build_sat(c).kinematics(v0).second - D; };
  const double scale = (cb.u_max - cb.u_min) / (T * T);
  const double e0 = excess_sat(0.0);
  const double sign = e0 > 0.0 ? 1.0 : -1.0;
  if (auto far = expand_until([&](double k) { return sign * excess_sat(sign * k) <= 0.0; }, scale)) {
    const double lo = sign > 0 ? 0.0 : -*far;
    const double hi = sign > 0 ? *far : 0.0;
    if (auto c = find_root(excess_sat, lo, hi)) {
      Profile pr = build_sat(*c);
      if (within_bounds(pr, v0, cb, sb)) return pr;
    }
  }

  // Ramp onto the speed bound with the control reaching zero, then hold.
  const bool upper = D > v0 * T;
  const double vb = upper ? sb.v_max : sb.v_min;
  const double sat_mag = upper ? cb.u_max : -cb.u_min;
  const double dv = vb - v0;
  auto build_hold = [&](double k) {
    Profile pr;
    pr.ramp_phase(dv, k, sat_mag, true);
    pr.constant(std::max(0.0, T - pr.duration()), 0.0);
    return pr;
  };
  auto ramp_time = [&](double k) {
    Profile pr;
    pr.ramp_phase(dv, k, sat_mag, true);
    return pr.duration();
  };
  if (std::abs(dv) / sat_mag > T) return std::nullopt;
  double small = scale;
  while (ramp_time(small) < T && small > 1e-12) small *= 0.5;
  auto big = expand_until([&](double k) { return ramp_time(k) <= T; }, scale);
  if (!big) return std::nullopt;
  auto k_lo = find_root([&](double k) { return ramp_time(k) - T; }, small, *big);
  const double k0 = k_lo ? *k_lo : *big;
  const double s = upper ? -1.0 : 1.0;  // displacement rises with k on the upper bound
  auto excess = [&](double k) { return build_hold(k).kinematics(v0).second - D; };
  auto far = expand_until([&](double k) { return s * excess(k) <= 0.0; }, std::max(k0, scale));
  if (!far) {
    Profile pr = build_hold(std::max(k0, scale) * std::pow(2.0, 80));
    if (std::abs(pr.kinematics(v0).second - D) <= rel_tol(D) * 1e-2) return pr;
    return std::nullopt;
  }
  auto k = find_root(excess, k0, *far);
  if (!k) return std::nullopt;
  Profile pr = build_hold(*k);
  if (!within_bounds(pr, v0, cb, sb)) return std::nullopt;
  return pr;
}

}  // namespace lanechange::ocp::detail
