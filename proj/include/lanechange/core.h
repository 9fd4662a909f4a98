#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace lanechange {

/// Longitudinal state of one vehicle at an instant. Positions are front-bumper
/// coordinates in a single global frame per lane.
struct VehicleState {
  double x = 0.0;  // m
  double v = 0.0;  // m/s
};

struct ControlBounds {
  double u_min = -7.0;  // m/s^2, negative
  double u_max = 3.3;   // m/s^2, positive

  void validate() const;
  double clamp(double u) const { return u < u_min ? u_min : (u > u_max ? u_max : u); }
};

struct SpeedBounds {
  double v_min = 16.0;  // m/s
  double v_max = 33.0;  // m/s

  void validate() const;
};

/// Constant-time-headway safe distance d(v) = delta + phi * v.
struct SafetyParams {
  double delta = 1.5;  // m
  double phi = 0.6;    // s

  void validate() const;
};

struct ManeuverParams {
  double alpha = 0.4;       // time/energy weight in [0, 1)
  double beta = 0.0;        // 0: derive from alpha and the control bounds
  double v_d = 29.0;        // m/s
  double delta_tol = 4.0;   // m^2/s^2, terminal-speed tolerance
  double d_start = 70.0;    // m
  double T_th = 12.0;       // s, maximum maneuver duration
  double D_th = 25.0;       // m^2, maximum admissible disruption
  double gamma = 0.01;      // disruption weight on the leading CAV i
  double lambda_tf = 1.2;   // relaxation factor, > 1
  double L_f = 60.0;        // m, forward window
  double L_r = 60.0;        // m, rear window
  double t_lat = 2.0;       // s, lateral phase duration
  bool relaxation = true;
  bool selfish_fallback = false;
  double abort_wait = 5.0;          // s before C may retry after an abort
  double relax_seed_duration = 1.0; // s, first relaxed duration when tf* == t0

  void validate() const;
  /// beta when set explicitly, otherwise derive_beta(alpha, b).
  double effective_beta(const ControlBounds& b) const;
  /// Lower/upper edge of the terminal-speed box |v - v_d| <= sqrt(delta_tol).
  double v_terminal_lo() const { return v_d - std::sqrt(delta_tol); }
  double v_terminal_hi() const { return v_d + std::sqrt(delta_tol); }
};

/// Failure categories reported by solvers and the planner.
enum class FailureKind { kInfeasible, kUnreachable, kInvalidInput };

struct Failure {
  FailureKind kind = FailureKind::kInfeasible;
  std::string message;
  /// Optional numeric diagnostic, e.g. the smallest feasible duration found
  /// beyond the admissible horizon.
  std::optional<double> diagnostic;
};

/// Value-or-failure return type used by the solvers. Preconditions that are
/// programming errors throw std::invalid_argument instead.
template <typename T>
class Result {
 public:
  Result(T value) : data_(std::move(value)) {}  // NOLINT(implicit)
  Result(Failure failure) : data_(std::move(failure)) {}  // NOLINT(implicit)

  bool ok() const { return std::holds_alternative<T>(data_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    if (!ok()) throw std::logic_error("Result::value on failure: " + failure().message);
    return std::get<T>(data_);
  }
  T&& value() && {
    if (!ok()) throw std::logic_error("Result::value on failure: " + failure().message);
    return std::get<T>(std::move(data_));
  }
  const T& operator*() const& { return value(); }
  const T* operator->() const { return &value(); }
  const Failure& failure() const { return std::get<Failure>(data_); }

 private:
  std::variant<T, Failure> data_;
};

inline Failure infeasible(std::string message, std::optional<double> diagnostic = std::nullopt) {
  return Failure{FailureKind::kInfeasible, std::move(message), diagnostic};
}

/// d(v) = delta + phi * v. Requires v >= 0.
double safe_distance(double v, const SafetyParams& p);

/// Position of a vehicle at time t when it keeps its speed from t0.
double project_constant_speed(const VehicleState& s, double t0, double t);

/// beta = alpha * max(u_min^2, u_max^2) / (2 (1 - alpha)).
double derive_beta(double alpha, const ControlBounds& b);

}  // namespace lanechange
