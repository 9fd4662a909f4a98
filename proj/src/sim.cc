#include "lanechange/sim.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace lanechange::sim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kSlow = 0;
constexpr int kFast = 1;

enum class Control { kIdm, kConstant, kPlan, kLateral };
enum class PlanRole { kNone, kC, kI, kI1 };

struct Vehicle {
  int id = 0;
  int lane = kSlow;
  int origin_lane = kSlow;
  int spawn_lane = kSlow;
  bool cav = true;
  bool is_u = false;
  double spawn_time = 0.0;
  double spawn_x = 0.0;
  double phi = 0.6;
  double d_start = 70.0;
  VehicleState s;
  double u = 0.0;
  Control control = Control::kIdm;
  std::optional<Trajectory> traj;
  PlanRole plan_role = PlanRole::kNone;
  double lateral_until = -kInf;
  bool crossed = false;
};

/// Attributes drawn at arrival time, independent of the traffic dynamics so
/// every mode sees the same demand for a given seed.
struct Arrival {
  double t = 0.0;
  bool cav = true;
  double phi = 0.6;
  double d_start = 70.0;
};

class ArrivalStream {
 public:
  ArrivalStream(std::uint64_t seed, double rate_per_s, const SimConfig& cfg)
      : rng_(seed), rate_(rate_per_s), cfg_(cfg) {
    advance();
  }
  /// Arrival due at or before t, if any, consuming it.
  std::optional<Arrival> pop_due(double t) {
    if (rate_ <= 0.0 || next_.t > t) return std::nullopt;
    Arrival a = next_;
    advance();
    return a;
  }

 private:
  void advance() {
    if (rate_ <= 0.0) return;
    std::exponential_distribution<double> gap(rate_);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> phi(cfg_.phi.mean, cfg_.phi.std);
    std::normal_distribution<double> d_start(cfg_.d_start.mean, cfg_.d_start.std);
    next_.t += gap(rng_);
    next_.cav = unit(rng_) < cfg_.penetration;
    next_.phi = std::max(0.05, phi(rng_));
    next_.d_start = std::max(0.0, d_start(rng_));
  }

  std::mt19937_64 rng_;
  double rate_;
  const SimConfig& cfg_;
  Arrival next_;
};

class World {
 public:
  explicit World(const SimConfig& cfg, std::ostream* trace);
  SimResult run();

 private:
  // Lane occupancy front to rear. A vehicle in its lateral phase is listed in
  // its target lane; in its origin lane it only acts as a leader.
  std::vector<std::size_t> lane_order(int lane, bool with_lateral_origin) const;
  Vehicle* find(int id);
  const Vehicle* find(int id) const;
  bool lateral_from(const Vehicle& v, int lane) const {
    return v.control == Control::kLateral && v.origin_lane == lane;
  }

  void spawn();
  void insert_u();
  void finish_phases();
  void schedule();
  std::optional<ScenarioSnapshot> snapshot(const Trigger& trigger) const;
  void adopt(const ManeuverPlan& plan, const ScenarioSnapshot& snap);
  void compute_controls();
  void advance();
  void check_and_record();
  void write_trace() const;

  SafetyParams safety_of(const Vehicle& v) const {
    return {cfg_.delta + cfg_.vehicle_length, v.phi};
  }
  IdmParams idm_of(const Vehicle& v) const {
    IdmParams p;
    p.v0 = cfg_.v_desired_spawn;
    p.T = v.phi;
    p.s0 = cfg_.delta;
    return p;
  }
  double idm_behind(const Vehicle& v, const Vehicle* leader) const {
    if (!leader) return idm_acceleration(v.s.v, kInf, 0.0, idm_of(v), cfg_.bounds);
    const double gap = leader->s.x - v.s.x - cfg_.vehicle_length;
    return idm_acceleration(v.s.v, gap, leader->s.v, idm_of(v), cfg_.bounds);
  }

  const SimConfig& cfg_;
  std::ostream* trace_;
  PlannerConfig planner_cfg_;
  std::vector<Vehicle> vehicles_;
  ArrivalStream arrivals_[2];
  std::vector<Arrival> queued_[2];
  bool u_spawned_ = false;
  int next_id_ = 1;
  double t_ = 0.0;
  long step_ = 0;
  SequentialScheduler scheduler_;
  struct Active {
    ManeuverPlan plan;
  };
  std::optional<Active> active_;
  SimResult result_;
};

std::uint64_t stream_seed(std::uint64_t seed, int lane) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(lane)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

World::World(const SimConfig& cfg, std::ostream* trace)
    : cfg_(cfg),
      trace_(trace),
      arrivals_{ArrivalStream(stream_seed(cfg.seed, kSlow), cfg.flow / 2.0 / 3600.0, cfg),
                ArrivalStream(stream_seed(cfg.seed, kFast), cfg.flow / 2.0 / 3600.0, cfg)},
      scheduler_(
          [this](const ScenarioSnapshot& snap) {
            return cfg_.mode == Mode::kVehicleCentric ? plan_selfish(snap, planner_cfg_)
                                                      : plan_maneuver(snap, planner_cfg_);
          },
          cfg.params.t_lat, cfg.params.abort_wait) {
  planner_cfg_.params = cfg.params;
  planner_cfg_.bounds = cfg.bounds;
  planner_cfg_.speeds = cfg.speeds;
  planner_cfg_.set_rule = cfg.set_rule;
  result_.min_gap_after_warmup = kInf;
}

Vehicle* World::find(int id) {
  for (Vehicle& v : vehicles_) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

const Vehicle* World::find(int id) const {
  for (const Vehicle& v : vehicles_) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

std::vector<std::size_t> World::lane_order(int lane, bool with_lateral_origin) const {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < vehicles_.size(); ++k) {
    const Vehicle& v = vehicles_[k];
    if (v.lane == lane || (with_lateral_origin && lateral_from(v, lane))) idx.push_back(k);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (vehicles_[a].s.x != vehicles_[b].s.x) return vehicles_[a].s.x > vehicles_[b].s.x;
    return vehicles_[a].id < vehicles_[b].id;
  });
  return idx;
}

void World::spawn() {
  for (int lane : {kSlow, kFast}) {
    while (auto a = arrivals_[lane].pop_due(t_)) queued_[lane].push_back(*a);
    if (queued_[lane].empty()) continue;

    const auto order = lane_order(lane, true);
    const double gap = order.empty() ? kInf : vehicles_[order.back()].s.x - cfg_.vehicle_length;
    const Arrival& a = queued_[lane].front();
    const auto speed = spawn_speed(gap, a.phi, cfg_);
    if (!speed) continue;

    Vehicle v;
    v.id = next_id_++;
    v.cav = a.cav;
    v.phi = a.phi;
    v.d_start = a.d_start;
    v.lane = v.origin_lane = v.spawn_lane = lane;
    v.spawn_time = t_;
    v.s = {0.0, *speed};
    queued_[lane].erase(queued_[lane].begin());
    vehicles_.push_back(std::move(v));
    ++result_.spawned;
  }
}

void World::insert_u() {
  if (u_spawned_ || cfg_.u_spawn_time < 0.0 || t_ < cfg_.u_spawn_time) return;
  const double x0 = cfg_.u_spawn_x;
  const double phi = cfg_.phi.mean;
  for (std::size_t k : lane_order(kSlow, true)) {
    const Vehicle& v = vehicles_[k];
    if (v.s.x > x0) {
      if (v.s.x - x0 - cfg_.vehicle_length < cfg_.delta + phi * cfg_.vU) return;
    } else {
      // The follower must be able to settle behind U at comfortable braking.
      const double closing = std::max(0.0, v.s.v - cfg_.vU);
      const double need = safe_distance(v.s.v, safety_of(v)) + closing * closing / (2.0 * 3.0);
      if (x0 - v.s.x < need) return;
      break;
    }
  }
  Vehicle u;
  u.id = next_id_++;
  u.is_u = true;
  u.cav = false;
  u.phi = phi;
  u.control = Control::kConstant;
  u.spawn_time = t_;
  u.spawn_x = x0;
  u.s = {x0, cfg_.vU};
  u.crossed = x0 >= cfg_.measurement_point;
  vehicles_.push_back(std::move(u));
  u_spawned_ = true;
  ++result_.spawned;
}

void World::finish_phases() {
  for (Vehicle& v : vehicles_) {
    if (v.control == Control::kLateral && t_ >= v.lateral_until - 1e-9) {
      v.control = Control::kIdm;
      v.origin_lane = v.lane;
    }
  }
  if (!active_ || t_ < active_->plan.tf - 1e-9) return;

  // Terminal margins of the executed plan, evaluated on the trajectories the
  // vehicles actually followed.
  const ManeuverPlan& plan = active_->plan;
  Vehicle* c = find(plan.c_id);
  auto executed = [&](std::optional<int> id) -> Vehicle* {
    if (!id) return nullptr;
    Vehicle* v = find(*id);
    return v && v->control == Control::kPlan ? v : nullptr;
  };
  Vehicle* vi = executed(plan.i_id);
  Vehicle* vi1 = executed(plan.i1_id);
  const VehicleState c_end = plan.traj_C.end_state();
  auto note = [&](double margin) {
    result_.max_safety_violation = std::max(result_.max_safety_violation, -margin);
  };
  if (c) {
    const SafetyParams sc = safety_of(*c);
    if (vi && plan.traj_i) note(plan.traj_i->end_state().x - c_end.x - safe_distance(c_end.v, sc));
    if (vi1 && plan.traj_i1) {
      note(c_end.x - plan.traj_i1->end_state().x -
           safe_distance(plan.traj_i1->start_state().v, safety_of(*vi1)));
    }
  }

  for (Vehicle* v : {vi, vi1}) {
    if (!v) continue;
    v->control = Control::kIdm;
    v->traj.reset();
    v->plan_role = PlanRole::kNone;
  }
  if (c && c->control == Control::kPlan) {
    c->traj.reset();
    c->plan_role = PlanRole::kNone;
    c->control = Control::kLateral;
    c->origin_lane = c->lane;
    c->lane = kFast;
    c->lateral_until = plan.tf + cfg_.params.t_lat;
    c->u = 0.0;
    ++result_.lane_changes;
  }
  active_.reset();
}

std::optional<ScenarioSnapshot> World::snapshot(const Trigger& trigger) const {
  const Vehicle* u = find(trigger.u_id);
  const Vehicle* c = find(trigger.c_id);
  if (!u || !c || c->control != Control::kIdm || c->lane != kSlow || !c->cav) return std::nullopt;

  ScenarioSnapshot snap;
  snap.t = t_;
  for (std::size_t k : lane_order(kSlow, false)) {
    const Vehicle& v = vehicles_[k];
    SnapshotVehicle sv{v.id, v.s, v.cav ? Role::kCav : Role::kBackground, safety_of(v)};
    if (v.id == u->id) sv.role = Role::kU;
    if (v.id == c->id) sv.role = Role::kC;
    snap.slow_lane.push_back(sv);
  }
  for (std::size_t k : lane_order(kFast, false)) {
    const Vehicle& v = vehicles_[k];
    const bool free = v.cav && v.control == Control::kIdm && v.s.v >= cfg_.speeds.v_min &&
                      v.s.v <= cfg_.speeds.v_max;
    snap.fast_lane.push_back({v.id, v.s, free ? Role::kCav : Role::kBackground, safety_of(v)});
  }
  const auto pair = identify_C(snap);
  if (!pair || pair->c_id != c->id || pair->u_id != u->id) return std::nullopt;
  if (!should_trigger(u->s.x, c->s.x, c->d_start)) return std::nullopt;
  return snap;
}

void World::schedule() {
  if (cfg_.mode == Mode::kNoCooperation) return;
  const auto slow = lane_order(kSlow, false);
  for (std::size_t k = 0; k + 1 < slow.size(); ++k) {
    const Vehicle& u = vehicles_[slow[k]];
    const Vehicle& c = vehicles_[slow[k + 1]];
    if (!u.is_u || !c.cav || c.control != Control::kIdm) continue;
    if (should_trigger(u.s.x, c.s.x, c.d_start)) scheduler_.submit({t_, c.id, u.id});
  }
  if (scheduler_.queued() == 0) return;

  std::optional<ScenarioSnapshot> used;
  auto provider = [&](const Trigger& trig) {
    used = snapshot(trig);
    return used;
  };
  auto plan = scheduler_.poll(t_, provider);
  if (plan) adopt(*plan, *used);
}

void World::adopt(const ManeuverPlan& plan, const ScenarioSnapshot& snap) {
  if (!validate_plan(plan, snap, planner_cfg_).empty()) ++result_.invalid_plans;
  result_.controlled_energy += plan.energy();
  auto attach = [&](int id, const Trajectory& traj, PlanRole role) {
    Vehicle* v = find(id);
    if (!v) throw InvariantBreach("planned vehicle vanished");
    v->control = Control::kPlan;
    v->traj = traj;
    v->plan_role = role;
  };
  attach(plan.c_id, plan.traj_C, PlanRole::kC);
  if (plan.i_id && plan.traj_i) attach(*plan.i_id, *plan.traj_i, PlanRole::kI);
  if (plan.i1_id && plan.traj_i1) attach(*plan.i1_id, *plan.traj_i1, PlanRole::kI1);
  active_ = Active{plan};
  // Zero-duration plans switch lanes right away.
  if (plan.tf <= t_ + 1e-12) finish_phases();
}

void World::compute_controls() {
  for (int lane : {kSlow, kFast}) {
    const auto order = lane_order(lane, true);
    const Vehicle* lead_any = nullptr;   // nearest vehicle ahead
    const Vehicle* lead_real = nullptr;  // nearest one that is not leaving this lane
    for (std::size_t k : order) {
      Vehicle& v = vehicles_[k];
      const bool leaving = lateral_from(v, lane);
      if (!leaving) {
        switch (v.control) {
          case Control::kConstant:
            v.u = 0.0;
            break;
          case Control::kPlan:
            // Execution guard: a cooperating vehicle whose real leader got
            // closer than the standstill gap falls back to car following.
            if (v.plan_role != PlanRole::kC && lead_real &&
                lead_real->s.x - v.s.x - cfg_.vehicle_length < cfg_.delta) {
              v.control = Control::kIdm;
              v.traj.reset();
              v.plan_role = PlanRole::kNone;
              ++result_.guard_interventions;
              v.u = std::min(idm_behind(v, lead_any), idm_behind(v, lead_real));
            } else {
              v.u = v.traj->control_at(std::min(t_, v.traj->tf()));
            }
            break;
          case Control::kLateral:
            v.u = std::min(0.0, std::min(idm_behind(v, lead_any), idm_behind(v, lead_real)));
            break;
          case Control::kIdm:
            v.u = std::min(idm_behind(v, lead_any), idm_behind(v, lead_real));
            break;
        }
      }
      lead_any = &v;
      if (!leaving) lead_real = &v;
    }
  }
}

void World::advance() {
  const double t1 = t_ + cfg_.dt;
  for (Vehicle& v : vehicles_) {
    const double x_before = v.s.x;
    if (v.control == Control::kPlan) {
      const Trajectory& tr = *v.traj;
      if (t1 <= tr.tf()) {
        v.s = tr.state_at(t1);
      } else {
        const VehicleState e = tr.end_state();
        v.s = {e.x + e.v * (t1 - tr.tf()), e.v};
      }
    } else {
      v.s = integrate(v.s, v.u, cfg_.dt);
    }
    // Crossing time by linear interpolation within the step.
    if (!v.crossed && x_before < cfg_.measurement_point && v.s.x >= cfg_.measurement_point) {
      const double frac = (cfg_.measurement_point - x_before) / (v.s.x - x_before);
      result_.crossings.push_back({v.id, t_ + frac * cfg_.dt, v.spawn_time, v.spawn_x, v.spawn_lane});
      v.crossed = true;
    }
  }
  ++step_;
  t_ = static_cast<double>(step_) * cfg_.dt;
}

void World::check_and_record() {
  if (active_) {
    const Vehicle* c = find(active_->plan.c_id);
    const Vehicle* u = find(active_->plan.u_id);
    if (c && u && c->plan_role == PlanRole::kC && t_ <= active_->plan.tf + 1e-9) {
      const double margin = u->s.x - c->s.x - safe_distance(c->s.v, safety_of(*c));
      result_.max_safety_violation = std::max(result_.max_safety_violation, -margin);
    }
  }
  for (int lane : {kSlow, kFast}) {
    const auto order = lane_order(lane, false);
    for (std::size_t k = 1; k < order.size(); ++k) {
      const Vehicle& lead = vehicles_[order[k - 1]];
      const Vehicle& v = vehicles_[order[k]];
      const double gap = lead.s.x - v.s.x - cfg_.vehicle_length;
      if (gap < -1e-9) {
        throw InvariantBreach("collision between vehicles " + std::to_string(lead.id) + " and " +
                              std::to_string(v.id) + " at t=" + std::to_string(t_));
      }
      if (v.control == Control::kIdm && t_ >= cfg_.warmup) {
        result_.min_gap_after_warmup = std::min(result_.min_gap_after_warmup, gap);
      }
    }
  }
  std::erase_if(vehicles_, [&](const Vehicle& v) {
    return v.s.x > cfg_.highway_length && !(active_ && (v.id == active_->plan.c_id));
  });
}

void World::write_trace() const {
  const long every = std::max(1L, std::lround(cfg_.trace_interval / cfg_.dt));
  if (step_ % every != 0) return;
  for (int lane : {kSlow, kFast}) {
    for (std::size_t k : lane_order(lane, false)) {
      const Vehicle& v = vehicles_[k];
      std::string_view role = v.is_u ? "U"
                              : (v.plan_role == PlanRole::kC || v.control == Control::kLateral)
                                  ? "C"
                              : v.cav ? "cav"
                                      : "background";
      *trace_ << t_ << ',' << v.id << ',' << lane << ',' << v.s.x << ',' << v.s.v << ',' << v.u
              << ',' << role << '\n';
    }
  }
}

SimResult World::run() {
  if (trace_ && cfg_.trace_interval > 0.0) *trace_ << "t,vehicle_id,lane,x,v,u,role\n";
  const long steps = std::lround(cfg_.duration / cfg_.dt);
  while (step_ < steps) {
    spawn();
    insert_u();
    finish_phases();
    schedule();
    compute_controls();
    advance();
    check_and_record();
    if (trace_ && cfg_.trace_interval > 0.0) write_trace();
  }
  result_.log = scheduler_.log();
  return std::move(result_);
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kNoCooperation: return "no_cooperation";
    case Mode::kVehicleCentric: return "vehicle_centric";
    case Mode::kSystemCentric: return "system_centric";
  }
  return "system_centric";
}

std::optional<Mode> parse_mode(std::string_view name) {
  for (Mode m : {Mode::kNoCooperation, Mode::kVehicleCentric, Mode::kSystemCentric}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

void SimConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("SimConfig: ") + what);
  };
  require(dt > 0.0, "dt must be positive");
  require(duration > 0.0, "duration must be positive");
  require(flow >= 0.0, "flow must be non-negative");
  require(highway_length > 0.0, "highway_length must be positive");
  require(measurement_point > 0.0 && measurement_point <= highway_length,
          "measurement_point must lie on the highway");
  require(measurement_window > 0.0, "measurement_window must be positive");
  require(warmup >= 0.0, "warmup must be non-negative");
  require(vehicle_length >= 0.0 && delta >= 0.0, "vehicle_length and delta must be non-negative");
  require(penetration >= 0.0 && penetration <= 1.0, "penetration must lie in [0, 1]");
  require(phi.std >= 0.0 && d_start.std >= 0.0, "standard deviations must be non-negative");
  require(v_desired_spawn > 0.0 && vU > 0.0, "speeds must be positive");
  require(u_spawn_x >= 0.0 && u_spawn_x < highway_length, "u_spawn_x must lie on the highway");
  require(trace_interval >= 0.0, "trace_interval must be non-negative");
  params.validate();
  bounds.validate();
  speeds.validate();
}

std::optional<double> spawn_speed(double gap, double phi, const SimConfig& config) {
  const double speed = std::min(config.v_desired_spawn, (gap - config.delta) / phi);
  if (speed < config.speeds.v_min) return std::nullopt;
  return speed;
}

double idm_acceleration(double v, double gap, double v_leader, const IdmParams& p,
                        const ControlBounds& bounds) {
  const double free_term = 1.0 - std::pow(v / p.v0, p.exponent);
  if (std::isinf(gap)) return bounds.clamp(p.a * free_term);
  if (gap < p.s0) return bounds.u_min;
  const double s_star =
      p.s0 + std::max(0.0, v * p.T + v * (v - v_leader) / (2.0 * std::sqrt(p.a * p.b)));
  return bounds.clamp(p.a * (free_term - (s_star / gap) * (s_star / gap)));
}

VehicleState integrate(VehicleState s, double u, double dt) {
  if (s.v + u * dt < 0.0) {
    const double t_stop = s.v / -u;
    return {s.x + 0.5 * s.v * t_stop, 0.0};
  }
  return {s.x + s.v * dt + 0.5 * u * dt * dt, s.v + u * dt};
}

SimResult run(const SimConfig& config, std::ostream* trace) {
  config.validate();
  World world(config, trace);
  return world.run();
}

std::optional<UcPair> identify_C(const ScenarioSnapshot& world) {
  const auto& lane = world.slow_lane;
  for (std::size_t k = 0; k < lane.size(); ++k) {
    if (lane[k].role != Role::kU) continue;
    if (k + 1 == lane.size()) return std::nullopt;
    const Role r = lane[k + 1].role;
    if (r != Role::kCav && r != Role::kC) return std::nullopt;
    return UcPair{lane[k].id, lane[k + 1].id};
  }
  return std::nullopt;
}

}  // namespace lanechange::sim
