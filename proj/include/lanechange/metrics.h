#pragma once

#include <map>
#include <span>
#include <string>

#include <json.hpp>

#include "lanechange/planner.h"
#include "lanechange/sim.h"

namespace lanechange::metrics {

struct Throughput {
  int count = 0;
  double flow = 0.0;  // veh/h
};

/// Crossings with timestamp in [t_start, t_start + window]; flow is
/// count * 3600 / window. Throws std::invalid_argument unless window > 0.
Throughput throughput(std::span<const double> events, double t_start, double window);

/// Sum of d_star over planned maneuvers.
double aggregate_disruption(const ManeuverLog& log);

/// Table-II style figures for one group of vehicles.
struct SegmentStats {
  int vehicle_count = 0;
  double flow = 0.0;             // veh/h
  double avg_travel_time = 0.0;  // s, spawn to measurement point
  double avg_speed = 0.0;        // m/s, mean of per-vehicle distance / travel time
};

struct RunMetrics {
  SegmentStats all;
  /// Only vehicles that entered in the slow lane (U's lane).
  SegmentStats slow_origin;
  double total_energy = 0.0;  // m^2/s^3 over controlled vehicles
  double d_total = 0.0;       // m^2, planned (system-centric) maneuvers
  double d_total_executed = 0.0;  // m^2, including selfish fallbacks
  std::map<std::string, int> maneuver_stats;
  int lane_changes = 0;
  int guard_interventions = 0;
  int invalid_plans = 0;
  double max_safety_violation = 0.0;  // m
};

RunMetrics compute(const sim::SimResult& result, const sim::SimConfig& config);

nlohmann::json to_json(const RunMetrics& m);
nlohmann::json to_json(const sim::SimConfig& c);
/// Run summary: metrics, config echo and seed. Keys are sorted and no
/// wall-clock values are included, so equal runs give equal bytes.
std::string run_report(const sim::SimConfig& config, const RunMetrics& m);

}  // namespace lanechange::metrics
