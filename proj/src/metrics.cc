#include "lanechange/metrics.h"

#include <stdexcept>
#include <vector>

namespace lanechange::metrics {
namespace {

SegmentStats segment(const std::vector<const sim::Crossing*>& xs, double point, double window) {
  SegmentStats s;
  s.vehicle_count = static_cast<int>(xs.size());
  s.flow = s.vehicle_count * 3600.0 / window;
  if (xs.empty()) return s;
  double tt = 0.0;
  double speed = 0.0;
  for (const sim::Crossing* c : xs) {
    const double dt = c->t - c->spawn_time;
    tt += dt;
    speed += (point - c->spawn_x) / dt;
  }
  s.avg_travel_time = tt / xs.size();
  s.avg_speed = speed / xs.size();
  return s;
}

nlohmann::json to_json(const SegmentStats& s) {
  return {{"vehicle_count", s.vehicle_count},
          {"flow", s.flow},
          {"avg_travel_time", s.avg_travel_time},
          {"avg_speed", s.avg_speed}};
}

}  // namespace

Throughput throughput(std::span<const double> events, double t_start, double window) {
  if (!(window > 0.0)) throw std::invalid_argument("throughput: window must be positive");
  Throughput out;
  for (double t : events) {
    if (t >= t_start && t <= t_start + window) ++out.count;
  }
  out.flow = out.count * 3600.0 / window;
  return out;
}

double aggregate_disruption(const ManeuverLog& log) { return log.d_total(); }

RunMetrics compute(const sim::SimResult& result, const sim::SimConfig& config) {
  const double t0 = config.window_start();
  const double t1 = t0 + config.measurement_window;
  std::vector<const sim::Crossing*> all;
  std::vector<const sim::Crossing*> slow;
  for (const sim::Crossing& c : result.crossings) {
    if (c.t < t0 || c.t > t1) continue;
    all.push_back(&c);
    if (c.origin_lane == 0) slow.push_back(&c);
  }
  RunMetrics m;
  m.all = segment(all, config.measurement_point, config.measurement_window);
  m.slow_origin = segment(slow, config.measurement_point, config.measurement_window);
  m.total_energy = result.controlled_energy;
  m.d_total = aggregate_disruption(result.log);
  m.d_total_executed = result.log.d_total_executed();
  m.maneuver_stats = result.log.counts_by_status();
  m.lane_changes = result.lane_changes;
  m.guard_interventions = result.guard_interventions;
  m.invalid_plans = result.invalid_plans;
  m.max_safety_violation = result.max_safety_violation;
  return m;
}

nlohmann::json to_json(const RunMetrics& m) {
  return {{"all_vehicles", to_json(m.all)},
          {"slow_lane_origin", to_json(m.slow_origin)},
          {"total_energy", m.total_energy},
          {"d_total", m.d_total},
          {"d_total_executed", m.d_total_executed},
          {"maneuver_stats", m.maneuver_stats},
          {"lane_changes", m.lane_changes},
          {"guard_interventions", m.guard_interventions},
          {"invalid_plans", m.invalid_plans},
          {"max_safety_violation", m.max_safety_violation}};
}

nlohmann::json to_json(const sim::SimConfig& c) {
  const ManeuverParams& p = c.params;
  return {
      {"highway_length", c.highway_length},
      {"flow", c.flow},
      {"v_desired_spawn", c.v_desired_spawn},
      {"vU", c.vU},
      {"dt", c.dt},
      {"duration", c.duration},
      {"seed", c.seed},
      {"vehicle_length", c.vehicle_length},
      {"measurement_point", c.measurement_point},
      {"warmup", c.warmup},
      {"measurement_window", c.measurement_window},
      {"d_start", {{"mean", c.d_start.mean}, {"std", c.d_start.std}}},
      {"phi", {{"mean", c.phi.mean}, {"std", c.phi.std}}},
      {"delta", c.delta},
      {"u_spawn_time", c.u_spawn_time},
      {"u_spawn_x", c.u_spawn_x},
      {"penetration", c.penetration},
      {"mode", std::string(sim::to_string(c.mode))},
      {"cooperative_set", c.set_rule == CooperativeSetRule::kMinMax ? "minmax" : "constant_speed"},
      {"bounds", {{"u_min", c.bounds.u_min}, {"u_max", c.bounds.u_max}}},
      {"speeds", {{"v_min", c.speeds.v_min}, {"v_max", c.speeds.v_max}}},
      {"params",
       {{"alpha", p.alpha},
        {"beta", p.beta},
        {"v_d", p.v_d},
        {"delta_tol", p.delta_tol},
        {"T_th", p.T_th},
        {"D_th", p.D_th},
        {"gamma", p.gamma},
        {"lambda_tf", p.lambda_tf},
        {"L_f", p.L_f},
        {"L_r", p.L_r},
        {"t_lat", p.t_lat},
        {"relaxation", p.relaxation},
        {"selfish_fallback", p.selfish_fallback},
        {"abort_wait", p.abort_wait},
        {"relax_seed_duration", p.relax_seed_duration}}},
  };
}

std::string run_report(const sim::SimConfig& config, const RunMetrics& m) {
  nlohmann::json doc{{"config", to_json(config)}, {"seed", config.seed}, {"metrics", to_json(m)}};
  return doc.dump(2) + "\n";
}

}  // namespace lanechange::metrics
