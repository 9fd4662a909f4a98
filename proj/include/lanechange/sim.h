#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lanechange/core.h"
#include "lanechange/planner.h"

namespace lanechange::sim {

enum class Mode { kNoCooperation, kVehicleCentric, kSystemCentric };
std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view name);

struct Normal {
  double mean = 0.0;
  double std = 0.0;
};

struct SimConfig {
  double highway_length = 1500.0;  // m
  double flow = 3000.0;            // veh/h, split evenly over both lanes
  double v_desired_spawn = 29.0;   // m/s, also the car-following desired speed
  double vU = 16.0;                // m/s
  double dt = 0.1;                 // s
  double duration = 300.0;         // s simulated
  std::uint64_t seed = 1;
  double vehicle_length = 5.0;          // m
  double measurement_point = 1400.0;    // m
  double warmup = 60.0;                 // s before the analysis window opens
  double measurement_window = 120.0;    // s
  Normal d_start{70.0, 10.0};           // m
  Normal phi{0.6, 0.04};                // s
  double delta = 1.5;                   // m, standstill gap
  /// U joins the slow lane at u_spawn_x once the lane has room there, no
  /// earlier than u_spawn_time; a negative time disables U.
  double u_spawn_time = 98.75;
  double u_spawn_x = 100.0;  // m
  double penetration = 1.0;  // share of spawned vehicles that are CAVs
  ManeuverParams params;
  ControlBounds bounds;
  SpeedBounds speeds;
  CooperativeSetRule set_rule = CooperativeSetRule::kConstantSpeed;
  Mode mode = Mode::kSystemCentric;
  /// Trace sample period in seconds; 0 disables the trace.
  double trace_interval = 0.0;

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
  double window_start() const { return warmup; }
};

struct Crossing {
  int vehicle_id = 0;
  double t = 0.0;
  double spawn_time = 0.0;
  double spawn_x = 0.0;
  int origin_lane = 0;  // 0 slow, 1 fast
};

/// Everything a run records; RunMetrics are computed from this.
struct SimResult {
  std::vector<Crossing> crossings;
  ManeuverLog log;
  /// Sum of planned control energy over executed maneuvers (m^2/s^3).
  double controlled_energy = 0.0;
  /// Largest shortfall of a sampled gap below its planned safety margin (m);
  /// 0 when every margin holds.
  double max_safety_violation = 0.0;
  /// Plans of i or i+1 dropped because the real leader closed in.
  int guard_interventions = 0;
  /// Smallest bumper-to-bumper gap among background-controlled vehicles
  /// after the warm-up (m); +inf when never observed.
  double min_gap_after_warmup = 0.0;
  int spawned = 0;
  int lane_changes = 0;
  /// Plans that failed the independent validation (should stay 0).
  int invalid_plans = 0;
};

/// Raised when the world breaks a physical invariant (a collision or a lane
/// overtaking). Indicates a solver or model bug; the run halts.
class InvariantBreach : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Intelligent Driver Model acceleration with the hard-brake guard.
struct IdmParams {
  double v0 = 29.0;
  double a = 3.3;
  double b = 3.0;
  double exponent = 4.0;
  double T = 0.6;
  double s0 = 1.5;
};
/// `gap` is bumper to bumper; no leader means gap = +inf.
double idm_acceleration(double v, double gap, double v_leader, const IdmParams& p,
                        const ControlBounds& bounds);

/// Entry speed for a vehicle spawned at x = 0 behind a rear bumper `gap`
/// metres ahead: min(v_desired_spawn, (gap - delta) / phi). Nullopt (spawn
/// deferred) when that falls below v_min.
std::optional<double> spawn_speed(double gap, double phi, const SimConfig& config);

/// Exact constant-acceleration step that stops at v = 0 instead of reversing.
VehicleState integrate(VehicleState s, double u, double dt);

/// Runs one simulation. The trace (if enabled and `trace` is non-null) is
/// written as CSV with header t,vehicle_id,lane,x,v,u,role.
SimResult run(const SimConfig& config, std::ostream* trace = nullptr);

/// The immediate follower of U in the slow lane when it is a CAV.
struct UcPair {
  int u_id = 0;
  int c_id = 0;
};
std::optional<UcPair> identify_C(const ScenarioSnapshot& world);

}  // namespace lanechange::sim
