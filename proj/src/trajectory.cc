#include "lanechange/trajectory.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lanechange {

VehicleState Arc::state_at(double t) const {
  const double tau = t - t_start;
  if (kind == Kind::kAffine) {
    return {start.x + start.v * tau + 0.5 * u0 * tau * tau + jerk * tau * tau * tau / 6.0,
            start.v + u0 * tau + 0.5 * jerk * tau * tau};
  }
  const double dv = start.v - v_target;
  const double e = std::exp(-tau / tau_c);
  return {start.x + v_target * tau + dv * tau_c * (1.0 - e), v_target + dv * e};
}

double Arc::control_at(double t) const {
  const double tau = t - t_start;
  if (kind == Kind::kAffine) return u0 + jerk * tau;
  return -(start.v - v_target) / tau_c * std::exp(-tau / tau_c);
}

double Arc::energy() const {
  const double L = duration();
  if (kind == Kind::kAffine) {
    return 0.5 * (u0 * u0 * L + u0 * jerk * L * L + jerk * jerk * L * L * L / 3.0);
  }
  const double dv = start.v - v_target;
  return dv * dv / (4.0 * tau_c) * (1.0 - std::exp(-2.0 * L / tau_c));
}

Trajectory::Builder::Builder(double t0, VehicleState s0) : t0_(t0), s0_(s0), t_(t0), s_(s0) {}

Trajectory::Builder& Trajectory::Builder::affine(double duration, double u0, double jerk) {
  if (duration < 0.0) throw std::invalid_argument("arc duration must be non-negative");
  if (duration == 0.0) return *this;
  Arc arc;
  arc.kind = Arc::Kind::kAffine;
  arc.t_start = t_;
  arc.t_end = t_ + duration;
  arc.start = s_;
  arc.u0 = u0;
  arc.jerk = jerk;
  s_ = arc.state_at(arc.t_end);
  t_ = arc.t_end;
  arcs_.push_back(arc);
  return *this;
}

Trajectory::Builder& Trajectory::Builder::headway(double duration, double v_target, double tau_c) {
  if (duration < 0.0) throw std::invalid_argument("arc duration must be non-negative");
  if (!(tau_c > 0.0)) throw std::invalid_argument("headway arc needs a positive time constant");
  if (duration == 0.0) return *this;
  Arc arc;
  arc.kind = Arc::Kind::kHeadway;
  arc.t_start = t_;
  arc.t_end = t_ + duration;
  arc.start = s_;
  arc.v_target = v_target;
  arc.tau_c = tau_c;
  s_ = arc.state_at(arc.t_end);
  t_ = arc.t_end;
  arcs_.push_back(arc);
  return *this;
}

Trajectory Trajectory::Builder::build() const { return Trajectory(t0_, s0_, arcs_); }

Trajectory::Trajectory(double t0, VehicleState s0, std::vector<Arc> arcs)
    : t0_(t0), tf_(arcs.empty() ? t0 : arcs.back().t_end), s0_(s0), arcs_(std::move(arcs)) {
  for (const Arc& a : arcs_) energy_ += a.energy();
}

Trajectory Trajectory::stationary(double t0, VehicleState s0) { return Trajectory(t0, s0, {}); }

Trajectory Trajectory::cruise(double t0, double tf, VehicleState s0) {
  return Builder(t0, s0).affine(tf - t0, 0.0).build();
}

VehicleState Trajectory::end_state() const {
  return arcs_.empty() ? s0_ : arcs_.back().state_at(arcs_.back().t_end);
}

const Arc* Trajectory::find_arc(double t) const {
  if (arcs_.empty()) return nullptr;
  auto it = std::upper_bound(arcs_.begin(), arcs_.end(), t,
                             [](double value, const Arc& a) { return value < a.t_end; });
  if (it == arcs_.end()) return &arcs_.back();
  return &*it;
}

VehicleState Trajectory::state_at(double t) const {
  if (t < t0_ - 1e-12) throw std::invalid_argument("Trajectory::state_at before t0");
  if (arcs_.empty()) return {s0_.x + s0_.v * (t - t0_), s0_.v};
  if (t >= tf_) {
    const VehicleState e = end_state();
    return {e.x + e.v * (t - tf_), e.v};
  }
  return find_arc(std::max(t, t0_))->state_at(std::max(t, t0_));
}

double Trajectory::control_at(double t) const {
  if (arcs_.empty() || t < t0_ || t > tf_) return 0.0;
  return find_arc(t)->control_at(t);
}

std::pair<double, double> Trajectory::control_range() const {
  if (arcs_.empty()) return {0.0, 0.0};
  double lo = arcs_.front().control_at(arcs_.front().t_start);
  double hi = lo;
  for (const Arc& a : arcs_) {
    // Both control laws are monotone on an arc.
    for (double u : {a.control_at(a.t_start), a.control_at(a.t_end)}) {
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
  }
  return {lo, hi};
}

std::pair<double, double> Trajectory::speed_range() const {
  double lo = s0_.v;
  double hi = s0_.v;
  auto take = [&](double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (const Arc& a : arcs_) {
    take(a.state_at(a.t_end).v);
    // Affine arcs have a quadratic speed profile with a possible interior extremum.
    if (a.kind == Arc::Kind::kAffine && a.jerk != 0.0) {
      const double tau = -a.u0 / a.jerk;
      if (tau > 0.0 && tau < a.duration()) take(a.state_at(a.t_start + tau).v);
    }
  }
  return {lo, hi};
}

}  // namespace lanechange
