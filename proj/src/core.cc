#include "lanechange/core.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace lanechange {
namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

void ControlBounds::validate() const {
  require(std::isfinite(u_min) && std::isfinite(u_max), "control bounds must be finite");
  require(u_min < 0.0 && u_max > 0.0, "control bounds must satisfy u_min < 0 < u_max");
}

void SpeedBounds::validate() const {
  require(std::isfinite(v_min) && std::isfinite(v_max), "speed bounds must be finite");
  require(v_min > 0.0 && v_min < v_max, "speed bounds must satisfy 0 < v_min < v_max");
}

void SafetyParams::validate() const {
  require(delta >= 0.0 && phi >= 0.0, "safety parameters must be non-negative");
}

void ManeuverParams::validate() const {
  require(alpha >= 0.0 && alpha < 1.0, "alpha must lie in [0, 1)");
  require(beta >= 0.0, "beta must be non-negative");
  require(delta_tol >= 0.0, "delta_tol must be non-negative");
  require(lambda_tf > 1.0, "lambda_tf must exceed 1");
  require(T_th > 0.0, "T_th must be positive");
  require(D_th >= 0.0, "D_th must be non-negative");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(L_f >= 0.0 && L_r >= 0.0, "windows L_f and L_r must be non-negative");
  require(t_lat >= 0.0, "t_lat must be non-negative");
  require(abort_wait >= 0.0, "abort_wait must be non-negative");
  require(relax_seed_duration > 0.0, "relax_seed_duration must be positive");
}

double ManeuverParams::effective_beta(const ControlBounds& b) const {
  return beta > 0.0 ? beta : derive_beta(alpha, b);
}

double safe_distance(double v, const SafetyParams& p) {
  if (!(v >= 0.0)) throw std::invalid_argument("safe_distance: speed must be non-negative");
  return p.delta + p.phi * v;
}

double project_constant_speed(const VehicleState& s, double t0, double t) {
  if (t < t0) throw std::invalid_argument("project_constant_speed: t precedes t0");
  return s.x + s.v * (t - t0);
}

double derive_beta(double alpha, const ControlBounds& b) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("derive_beta: alpha must lie in [0, 1)");
  }
  const double u2 = std::max(b.u_min * b.u_min, b.u_max * b.u_max);
  return alpha * u2 / (2.0 * (1.0 - alpha));
}

}  // namespace lanechange
