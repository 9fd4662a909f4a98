#pragma once

#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lanechange/cooperation.h"
#include "lanechange/core.h"
#include "lanechange/ocp.h"
#include "lanechange/trajectory.h"

namespace lanechange {

enum class Role { kU, kC, kCav, kBackground };
std::string_view to_string(Role role);

struct SnapshotVehicle {
  int id = 0;
  VehicleState state;
  Role role = Role::kCav;
  /// Per-vehicle safe-distance parameters. The simulator folds the vehicle
  /// length into delta so that front-bumper positions can be compared.
  SafetyParams safety;
};

/// Frozen view of both lanes at a maneuver start. Lanes are ordered front to
/// rear.
struct ScenarioSnapshot {
  double t = 0.0;
  std::vector<SnapshotVehicle> slow_lane;
  std::vector<SnapshotVehicle> fast_lane;

  /// Throws std::invalid_argument unless lanes are strictly ordered, there is
  /// at most one U and C (if present) directly follows U.
  void validate() const;
  const SnapshotVehicle* find(Role role) const;
};

enum class PlanStatus { kPlanned, kAbortedInfeasible, kAbortedTimeout, kFallbackSelfish };
std::string_view to_string(PlanStatus status);

enum class CooperativeSetRule { kConstantSpeed, kMinMax };

struct PlannerConfig {
  ManeuverParams params;
  ControlBounds bounds;
  SpeedBounds speeds;
  CooperativeSetRule set_rule = CooperativeSetRule::kConstantSpeed;
  ocp::FreeTimeOptions free_time;
};

struct ManeuverPlan {
  double t0 = 0.0;
  double tf = 0.0;
  int relaxations = 0;
  int c_id = 0;
  int u_id = 0;
  Trajectory traj_C = Trajectory::stationary(0.0, {});
  std::optional<Trajectory> traj_i;
  std::optional<Trajectory> traj_i1;
  std::optional<int> i_id;
  std::optional<int> i1_id;
  double d_star = 0.0;
  PlanStatus status = PlanStatus::kAbortedInfeasible;
  std::string reason;

  bool executes() const {
    return status == PlanStatus::kPlanned || status == PlanStatus::kFallbackSelfish;
  }
  double energy() const;
};

/// C's trigger condition: x_U - x_C <= d_start.
bool should_trigger(double xU, double xC, double d_start);

/// System-centric maneuver: C's time/energy-optimal trajectory, cooperative
/// set, per-slot terminal QPs and pair selection, relaxing the horizon by
/// lambda_tf until a pair with disruption <= D_th exists or T_th is exceeded.
/// Pure function of its inputs.
ManeuverPlan plan_maneuver(const ScenarioSnapshot& snapshot, const PlannerConfig& config);

/// Vehicle-centric maneuver: C keeps its own optimal horizon tf*, merges into
/// the slot with the largest current gap that can be opened, and i / i+1 take
/// the smallest displacement that opens it, clamped to their reachable
/// intervals; the disruption threshold is ignored and there is no relaxation.
/// Status is kFallbackSelfish on success.
ManeuverPlan plan_selfish(const ScenarioSnapshot& snapshot, const PlannerConfig& config);

/// Independent re-check of a plan: horizon, disruption threshold (system
/// plans only), control and speed bounds and C's safety against U at 10 ms,
/// terminal merge gaps, and C's terminal speed window. Returns the list of
/// violated conditions (empty when the plan is valid).
std::vector<std::string> validate_plan(const ManeuverPlan& plan, const ScenarioSnapshot& snapshot,
                                       const PlannerConfig& config);

struct ManeuverRecord {
  int k = 0;
  double t0 = 0.0;
  double tf = 0.0;
  double d_star = 0.0;
  double energy_C = 0.0;
  double energy_i = 0.0;
  double energy_i1 = 0.0;
  int relaxations = 0;
  int c_id = 0;
  std::optional<int> i_id;
  std::optional<int> i1_id;
  PlanStatus status = PlanStatus::kAbortedInfeasible;
};

struct ManeuverLog {
  std::vector<ManeuverRecord> records;

  /// Sum of d_star over planned maneuvers.
  double d_total() const;
  /// Sum of d_star over every executed maneuver, selfish ones included.
  double d_total_executed() const;
  std::map<std::string, int> counts_by_status() const;
};

struct Trigger {
  double t = 0.0;
  int c_id = 0;
  int u_id = 0;
};

/// Serializes maneuvers: at most one is in its longitudinal or lateral phase
/// at any time, and maneuver k starts no earlier than maneuver k-1 ended.
/// Triggers arriving while busy are queued and revalidated against a live
/// snapshot before planning.
class SequentialScheduler {
 public:
  using Planner = std::function<ManeuverPlan(const ScenarioSnapshot&)>;
  /// Live snapshot for a queued trigger, or nullopt when it no longer holds.
  using SnapshotProvider = std::function<std::optional<ScenarioSnapshot>(const Trigger&)>;

  SequentialScheduler(Planner planner, double t_lat, double abort_wait);

  /// Queues a trigger unless C already has a queued trigger or is waiting out
  /// an abort.
  void submit(const Trigger& trigger);
  /// Advances to `now`. When idle, plans queued triggers in order until one
  /// executes; returns that plan.
  std::optional<ManeuverPlan> poll(double now, const SnapshotProvider& provider);

  bool busy(double now) const { return now < busy_until_; }
  /// End of the active maneuver's lateral phase.
  double busy_until() const { return busy_until_; }
  std::size_t queued() const { return queue_.size(); }
  const ManeuverLog& log() const { return log_; }

 private:
  Planner planner_;
  double t_lat_;
  double abort_wait_;
  double busy_until_ = -std::numeric_limits<double>::infinity();
  double last_tf_ = -std::numeric_limits<double>::infinity();
  std::deque<Trigger> queue_;
  std::map<int, double> blocked_until_;
  ManeuverLog log_;
};

}  // namespace lanechange
