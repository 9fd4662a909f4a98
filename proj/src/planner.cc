#include "lanechange/planner.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lanechange {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Fast-lane view shared by the system- and vehicle-centric planners.
struct Context {
  const SnapshotVehicle* U = nullptr;
  const SnapshotVehicle* C = nullptr;
  std::vector<coop::FastLaneVehicle> lane;  // whole fast lane, front to rear
  std::vector<char> is_cav;
  ocp::CavCProblem problem;
};

Context make_context(const ScenarioSnapshot& snap, const PlannerConfig& cfg) {
  snap.validate();
  Context ctx;
  ctx.U = snap.find(Role::kU);
  ctx.C = snap.find(Role::kC);
  if (!ctx.U || !ctx.C) throw std::invalid_argument("snapshot needs both U and C");
  for (const SnapshotVehicle& v : snap.fast_lane) {
    ctx.lane.push_back({v.id, v.state, v.safety});
    ctx.is_cav.push_back(v.role == Role::kCav);
  }
  ctx.problem = ocp::CavCProblem::make(ctx.C->state, ctx.U->state, snap.t, cfg.params, cfg.bounds,
                                       cfg.speeds, ctx.C->safety);
  return ctx;
}

/// A merge slot: the gap between lane[k-1] (i) and lane[k] (i+1).
struct Slot {
  std::size_t k = 0;
  coop::PairQpInput input;
};

/// Slots bordering a cooperative-set member, plus the slot that contains C's
/// terminal position under constant-speed projections.
std::vector<Slot> candidate_slots(const Context& ctx, const PlannerConfig& cfg, double t0,
                                  double tf, const Trajectory& traj_C) {
  const ManeuverParams& mp = cfg.params;
  const VehicleState c_end = traj_C.end_state();
  const double xU_tf = project_constant_speed(ctx.U->state, t0, tf);

  std::vector<coop::FastLaneVehicle> cavs;
  for (std::size_t k = 0; k < ctx.lane.size(); ++k) {
    if (ctx.is_cav[k]) cavs.push_back(ctx.lane[k]);
  }
  const coop::CooperativeSet set =
      cfg.set_rule == CooperativeSetRule::kMinMax
          ? coop::build_cooperative_set_minmax(cavs, xU_tf, c_end.x, t0, tf, mp.L_f, mp.L_r,
                                               cfg.bounds, cfg.speeds)
          : coop::build_cooperative_set(cavs, xU_tf, c_end.x, t0, tf, mp.L_f, mp.L_r);

  const std::size_t n = ctx.lane.size();
  auto proj = [&](std::size_t k) { return project_constant_speed(ctx.lane[k].state, t0, tf); };
  std::vector<Slot> slots;
  for (std::size_t k = 0; k <= n; ++k) {
    const bool has_i = k > 0;
    const bool has_i1 = k < n;
    const bool i_member = has_i && set.contains(ctx.lane[k - 1].id);
    const bool i1_member = has_i1 && set.contains(ctx.lane[k].id);
    const double ahead = has_i ? proj(k - 1) : kInf;
    const double behind = has_i1 ? proj(k) : -kInf;
    const bool straddles = ahead >= c_end.x && c_end.x >= behind;
    if (!i_member && !i1_member && !straddles) continue;

    Slot s;
    s.k = k;
    coop::PairQpInput& in = s.input;
    if (has_i) in.i = coop::SlotVehicle{ctx.lane[k - 1], i_member};
    if (has_i1) in.i1 = coop::SlotVehicle{ctx.lane[k], i1_member};
    if (k >= 2) in.leader = ctx.lane[k - 2].state;
    in.xC_tf = c_end.x;
    in.vC_tf = c_end.v;
    in.safety_C = ctx.C->safety;
    in.t0 = t0;
    in.tf = tf;
    in.gamma = mp.gamma;
    in.bounds = cfg.bounds;
    in.speeds = cfg.speeds;
    slots.push_back(std::move(s));
  }
  return slots;
}

/// Trajectory for one side of the chosen slot.
std::optional<Trajectory> side_trajectory(const coop::SlotVehicle& sv, double t0, double tf,
                                          double xf, const PlannerConfig& cfg) {
  const VehicleState s = sv.vehicle.state;
  if (tf <= t0) return Trajectory::stationary(t0, s);
  if (!sv.cooperating || std::abs(xf - project_constant_speed(s, t0, tf)) < 1e-9) {
    return Trajectory::cruise(t0, tf, s);
  }
  auto r = ocp::solve_energy_fixed_endpoint(s, t0, tf, xf, cfg.bounds, cfg.speeds);
  if (!r) return std::nullopt;
  return *std::move(r);
}

bool fill_sides(ManeuverPlan& plan, const coop::PairQpInput& in, const coop::PairSolution& sol,
                const PlannerConfig& cfg) {
  plan.traj_i.reset();
  plan.traj_i1.reset();
  if (in.i) {
    plan.traj_i = side_trajectory(*in.i, in.t0, in.tf, sol.x_i_f, cfg);
    if (!plan.traj_i) return false;
  }
  if (in.i1) {
    plan.traj_i1 = side_trajectory(*in.i1, in.t0, in.tf, sol.x_i1_f, cfg);
    if (!plan.traj_i1) return false;
  }
  plan.i_id = sol.i_id;
  plan.i1_id = sol.i1_id;
  plan.d_star = sol.d_star;
  return true;
}

/// Runs the slot QPs for one horizon and fills `plan` with the selected pair.
bool try_horizon(ManeuverPlan& plan, const Context& ctx, const PlannerConfig& cfg, double tf,
                 const Trajectory& traj_C) {
  const std::vector<Slot> slots = candidate_slots(ctx, cfg, plan.t0, tf, traj_C);
  std::vector<coop::PairSolution> sols;
  sols.reserve(slots.size());
  for (const Slot& s : slots) sols.push_back(coop::pair_terminal_qp(s.input));
  auto pick = coop::select_optimal_pair(sols, cfg.params.D_th);
  if (!pick) return false;
  if (!fill_sides(plan, slots[*pick].input, sols[*pick], cfg)) return false;
  plan.tf = tf;
  plan.traj_C = traj_C;
  return true;
}

/// Terminal positions that just open the slot, clamped to what each side can
/// reach; the disruption threshold is ignored.
std::optional<coop::PairSolution> selfish_slot(const coop::PairQpInput& in) {
  coop::PairSolution sol;
  const double T = in.tf - in.t0;
  auto reach = [&](const coop::SlotVehicle& sv, double x_proj, double want) {
    if (!sv.cooperating) return x_proj;
    const auto box =
        ocp::feasible_terminal_interval(sv.vehicle.state, in.t0, in.tf, in.bounds, in.speeds);
    return std::clamp(want, box.x_lo, box.x_hi);
  };
  if (in.i) {
    const coop::FastLaneVehicle& v = in.i->vehicle;
    const double x_proj = project_constant_speed(v.state, in.t0, in.tf);
    const double need = in.xC_tf + safe_distance(in.vC_tf, in.safety_C);
    const double x = reach(*in.i, x_proj, std::max(x_proj, need));
    if (x < need - 1e-9) return std::nullopt;
    if (in.leader) {
      const double v_top = std::min(v.state.v + in.bounds.u_max * T, in.speeds.v_max);
      const double x_leader = project_constant_speed(*in.leader, in.t0, in.tf);
      if (x_leader - x < safe_distance(v_top, v.safety) - 1e-9) return std::nullopt;
    }
    sol.i_id = v.id;
    sol.x_i_f = x;
    sol.delta_i = x_proj - x;
  }
  if (in.i1) {
    const coop::FastLaneVehicle& v = in.i1->vehicle;
    const double x_proj = project_constant_speed(v.state, in.t0, in.tf);
    const double need = in.xC_tf - safe_distance(v.state.v, v.safety);
    const double x = reach(*in.i1, x_proj, std::min(x_proj, need));
    if (x > need + 1e-9) return std::nullopt;
    sol.i1_id = v.id;
    sol.x_i1_f = x;
    sol.delta_i1 = x_proj - x;
  }
  sol.feasible = true;
  sol.d_star = coop::disruption_metric(sol.delta_i, sol.delta_i1, in.gamma);
  return sol;
}

bool try_selfish_horizon(ManeuverPlan& plan, const Context& ctx, const PlannerConfig& cfg,
                         double tf, const Trajectory& traj_C) {
  const std::vector<Slot> slots = candidate_slots(ctx, cfg, plan.t0, tf, traj_C);
  std::optional<std::size_t> best;
  std::optional<coop::PairSolution> best_sol;
  double best_gap = -kInf;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    auto sol = selfish_slot(slots[k].input);
    if (!sol) continue;
    const auto& in = slots[k].input;
    const double gap = (in.i ? in.i->vehicle.state.x : kInf) - (in.i1 ? in.i1->vehicle.state.x : -kInf);
    if (!best || gap > best_gap) {
      best = k;
      best_gap = gap;
      best_sol = sol;
    }
  }
  if (!best) return false;
  if (!fill_sides(plan, slots[*best].input, *best_sol, cfg)) return false;
  plan.tf = tf;
  plan.traj_C = traj_C;
  return true;
}

ManeuverPlan base_plan(const ScenarioSnapshot& snap, const Context& ctx) {
  ManeuverPlan plan;
  plan.t0 = snap.t;
  plan.tf = snap.t;
  plan.c_id = ctx.C->id;
  plan.u_id = ctx.U->id;
  plan.traj_C = Trajectory::stationary(snap.t, ctx.C->state);
  return plan;
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kU: return "U";
    case Role::kC: return "C";
    case Role::kCav: return "cav";
    case Role::kBackground: return "background";
  }
  return "cav";
}

std::string_view to_string(PlanStatus status) {
  switch (status) {
    case PlanStatus::kPlanned: return "planned";
    case PlanStatus::kAbortedInfeasible: return "aborted_infeasible";
    case PlanStatus::kAbortedTimeout: return "aborted_timeout";
    case PlanStatus::kFallbackSelfish: return "fallback_selfish";
  }
  return "planned";
}

void ScenarioSnapshot::validate() const {
  for (const auto* lane : {&slow_lane, &fast_lane}) {
    for (std::size_t k = 0; k < lane->size(); ++k) {
      const VehicleState& s = (*lane)[k].state;
      if (!std::isfinite(s.x) || !std::isfinite(s.v)) {
        throw std::invalid_argument("snapshot: non-finite vehicle state");
      }
      if (k > 0 && !(s.x < (*lane)[k - 1].state.x)) {
        throw std::invalid_argument("snapshot: lane not strictly ordered front to rear");
      }
    }
  }
  int n_u = 0;
  int n_c = 0;
  for (const auto& v : fast_lane) {
    if (v.role == Role::kU || v.role == Role::kC) {
      throw std::invalid_argument("snapshot: U and C belong to the slow lane");
    }
  }
  for (std::size_t k = 0; k < slow_lane.size(); ++k) {
    if (slow_lane[k].role == Role::kU) ++n_u;
    if (slow_lane[k].role == Role::kC) {
      ++n_c;
      if (k == 0 || slow_lane[k - 1].role != Role::kU) {
        throw std::invalid_argument("snapshot: C must directly follow U");
      }
    }
  }
  if (n_u > 1 || n_c > 1) throw std::invalid_argument("snapshot: at most one U and one C");
}

const SnapshotVehicle* ScenarioSnapshot::find(Role role) const {
  for (const auto* lane : {&slow_lane, &fast_lane}) {
    for (const SnapshotVehicle& v : *lane) {
      if (v.role == role) return &v;
    }
  }
  return nullptr;
}

double ManeuverPlan::energy() const {
  double e = traj_C.energy();
  if (traj_i) e += traj_i->energy();
  if (traj_i1) e += traj_i1->energy();
  return e;
}

bool should_trigger(double xU, double xC, double d_start) { return xU - xC <= d_start; }

ManeuverPlan plan_maneuver(const ScenarioSnapshot& snapshot, const PlannerConfig& cfg) {
  cfg.params.validate();
  const Context ctx = make_context(snapshot, cfg);
  const ManeuverParams& mp = cfg.params;
  ManeuverPlan plan = base_plan(snapshot, ctx);

  auto free = ocp::solve_cav_c_free_time(ctx.problem, mp.effective_beta(cfg.bounds), mp.T_th,
                                         cfg.free_time);
  if (!free) {
    plan.status = PlanStatus::kAbortedInfeasible;
    plan.reason = free.failure().message;
    return plan;
  }

  double T = free->tf_star - plan.t0;
  std::optional<Trajectory> traj_C = free->traj;
  while (true) {
    if (traj_C && try_horizon(plan, ctx, cfg, plan.t0 + T, *traj_C)) {
      plan.status = PlanStatus::kPlanned;
      return plan;
    }
    if (!mp.relaxation) break;
    T = T > 0.0 ? T * mp.lambda_tf : mp.relax_seed_duration;
    if (T > mp.T_th + 1e-9) break;
    ++plan.relaxations;
    auto fixed = ocp::min_energy_fixed_time(ctx.problem, plan.t0 + T);
    traj_C.reset();
    if (fixed) traj_C = fixed->traj;
  }

  if (mp.selfish_fallback) {
    ManeuverPlan selfish = plan_selfish(snapshot, cfg);
    if (selfish.executes()) {
      selfish.relaxations = plan.relaxations;
      return selfish;
    }
  }
  plan.status = PlanStatus::kAbortedTimeout;
  plan.reason = "no cooperative pair within the disruption threshold up to T_th";
  plan.traj_i.reset();
  plan.traj_i1.reset();
  plan.i_id.reset();
  plan.i1_id.reset();
  plan.d_star = 0.0;
  plan.tf = plan.t0;
  plan.traj_C = Trajectory::stationary(plan.t0, ctx.C->state);
  return plan;
}

ManeuverPlan plan_selfish(const ScenarioSnapshot& snapshot, const PlannerConfig& cfg) {
  cfg.params.validate();
  const Context ctx = make_context(snapshot, cfg);
  const ManeuverParams& mp = cfg.params;
  ManeuverPlan plan = base_plan(snapshot, ctx);

  auto free = ocp::solve_cav_c_free_time(ctx.problem, mp.effective_beta(cfg.bounds), mp.T_th,
                                         cfg.free_time);
  if (!free) {
    plan.status = PlanStatus::kAbortedInfeasible;
    plan.reason = free.failure().message;
    return plan;
  }
  if (try_selfish_horizon(plan, ctx, cfg, free->tf_star, free->traj)) {
    plan.status = PlanStatus::kFallbackSelfish;
    return plan;
  }
  plan.status = PlanStatus::kAbortedTimeout;
  plan.reason = "no slot around C's terminal position can be opened";
  plan.traj_i.reset();
  plan.traj_i1.reset();
  plan.i_id.reset();
  plan.i1_id.reset();
  plan.tf = plan.t0;
  plan.traj_C = Trajectory::stationary(plan.t0, ctx.C->state);
  return plan;
}

std::vector<std::string> validate_plan(const ManeuverPlan& plan, const ScenarioSnapshot& snapshot,
                                       const PlannerConfig& cfg) {
  std::vector<std::string> issues;
  if (!plan.executes()) return issues;
  const ManeuverParams& mp = cfg.params;
  const SnapshotVehicle* U = snapshot.find(Role::kU);
  const SnapshotVehicle* C = snapshot.find(Role::kC);
  if (!U || !C) return {"snapshot lacks U or C"};
  constexpr double kTol = 1e-6;
  const double T = plan.tf - plan.t0;
  if (T > mp.T_th + 1e-9) issues.push_back("horizon exceeds T_th");
  if (plan.status == PlanStatus::kPlanned && plan.d_star > mp.D_th + 1e-9) {
    issues.push_back("disruption exceeds D_th");
  }

  auto check_bounds = [&](const Trajectory& tr, const VehicleState& start, const std::string& who) {
    if (std::abs(tr.t0() - plan.t0) > 1e-9 || std::abs(tr.tf() - plan.tf) > 1e-9) {
      issues.push_back(who + ": horizon differs from the plan");
    }
    if (std::abs(tr.start_state().x - start.x) > 1e-9 ||
        std::abs(tr.start_state().v - start.v) > 1e-9) {
      issues.push_back(who + ": start state differs from the snapshot");
    }
    const int n = static_cast<int>(std::ceil(T / 0.01));
    for (int k = 0; k <= n; ++k) {
      const double t = plan.t0 + std::min(T, k * 0.01);
      const double u = tr.control_at(t);
      const double v = tr.state_at(t).v;
      if (u < cfg.bounds.u_min - kTol || u > cfg.bounds.u_max + kTol) {
        issues.push_back(who + ": control bound violated");
        break;
      }
      if (v < cfg.speeds.v_min - kTol || v > cfg.speeds.v_max + kTol) {
        issues.push_back(who + ": speed bound violated");
        break;
      }
    }
  };

  check_bounds(plan.traj_C, C->state, "C");
  const auto problem = ocp::CavCProblem::make(C->state, U->state, plan.t0, mp, cfg.bounds,
                                              cfg.speeds, C->safety);
  if (T > 0.0 && problem.min_safety_slack(plan.traj_C) < -kTol) {
    issues.push_back("C: safety against U violated");
  }
  const VehicleState c_end = plan.traj_C.end_state();
  if (c_end.v < mp.v_terminal_lo() - kTol || c_end.v > mp.v_terminal_hi() + kTol) {
    issues.push_back("C: terminal speed outside the window");
  }

  auto locate = [&](std::optional<int> id) -> std::optional<std::size_t> {
    if (!id) return std::nullopt;
    for (std::size_t k = 0; k < snapshot.fast_lane.size(); ++k) {
      if (snapshot.fast_lane[k].id == *id) return k;
    }
    return std::nullopt;
  };
  const auto ki = locate(plan.i_id);
  const auto ki1 = locate(plan.i1_id);
  if (plan.i_id.has_value() != plan.traj_i.has_value() || (plan.i_id && !ki)) {
    issues.push_back("i: trajectory or vehicle missing");
  }
  if (plan.i1_id.has_value() != plan.traj_i1.has_value() || (plan.i1_id && !ki1)) {
    issues.push_back("i+1: trajectory or vehicle missing");
  }
  if (ki && ki1 && *ki1 != *ki + 1) issues.push_back("pair is not adjacent");
  const std::size_t n_fast = snapshot.fast_lane.size();
  if (!ki && !ki1 && n_fast > 0) issues.push_back("slot has neither i nor i+1");
  if (!ki && ki1 && *ki1 != 0) issues.push_back("slot without i is not at the lane front");
  if (ki && !ki1 && *ki != n_fast - 1) issues.push_back("slot without i+1 is not at the lane end");

  if (ki && plan.traj_i) {
    const SnapshotVehicle& vi = snapshot.fast_lane[*ki];
    check_bounds(*plan.traj_i, vi.state, "i");
    const VehicleState e = plan.traj_i->end_state();
    if (e.x - c_end.x < safe_distance(c_end.v, C->safety) - kTol) {
      issues.push_back("terminal gap between i and C violated");
    }
    if (*ki > 0) {
      const double x_leader = project_constant_speed(snapshot.fast_lane[*ki - 1].state, plan.t0,
                                                     plan.tf);
      const double v_top = std::min(vi.state.v + cfg.bounds.u_max * T, cfg.speeds.v_max);
      if (x_leader - e.x < safe_distance(v_top, vi.safety) - kTol) {
        issues.push_back("terminal gap between i and its leader violated");
      }
    }
  }
  if (ki1 && plan.traj_i1) {
    const SnapshotVehicle& vi1 = snapshot.fast_lane[*ki1];
    check_bounds(*plan.traj_i1, vi1.state, "i+1");
    const VehicleState e = plan.traj_i1->end_state();
    if (c_end.x - e.x < safe_distance(vi1.state.v, vi1.safety) - kTol) {
      issues.push_back("terminal gap between C and i+1 violated");
    }
  }
  return issues;
}

double ManeuverLog::d_total() const {
  double s = 0.0;
  for (const auto& r : records) {
    if (r.status == PlanStatus::kPlanned) s += r.d_star;
  }
  return s;
}

double ManeuverLog::d_total_executed() const {
  double s = 0.0;
  for (const auto& r : records) {
    if (r.status == PlanStatus::kPlanned || r.status == PlanStatus::kFallbackSelfish) {
      s += r.d_star;
    }
  }
  return s;
}

std::map<std::string, int> ManeuverLog::counts_by_status() const {
  std::map<std::string, int> out;
  for (PlanStatus s : {PlanStatus::kPlanned, PlanStatus::kAbortedInfeasible,
                       PlanStatus::kAbortedTimeout, PlanStatus::kFallbackSelfish}) {
    out[std::string(to_string(s))] = 0;
  }
  for (const auto& r : records) ++out[std::string(to_string(r.status))];
  return out;
}

SequentialScheduler::SequentialScheduler(Planner planner, double t_lat, double abort_wait)
    : planner_(std::move(planner)), t_lat_(t_lat), abort_wait_(abort_wait) {
  if (!planner_) throw std::invalid_argument("SequentialScheduler: planner required");
  if (t_lat < 0.0 || abort_wait < 0.0) {
    throw std::invalid_argument("SequentialScheduler: negative duration");
  }
}

void SequentialScheduler::submit(const Trigger& trigger) {
  auto blocked = blocked_until_.find(trigger.c_id);
  if (blocked != blocked_until_.end() && trigger.t < blocked->second) return;
  for (const Trigger& q : queue_) {
    if (q.c_id == trigger.c_id) return;
  }
  queue_.push_back(trigger);
}

std::optional<ManeuverPlan> SequentialScheduler::poll(double now,
                                                      const SnapshotProvider& provider) {
  if (busy(now)) return std::nullopt;
  while (!queue_.empty()) {
    const Trigger trigger = queue_.front();
    queue_.pop_front();
    auto blocked = blocked_until_.find(trigger.c_id);
    if (blocked != blocked_until_.end() && now < blocked->second) continue;
    auto snap = provider(trigger);
    if (!snap) continue;
    ManeuverPlan plan = planner_(*snap);
    if (plan.executes() && plan.t0 < last_tf_) {
      throw std::logic_error("SequentialScheduler: maneuver starts before the previous one ended");
    }
    ManeuverRecord rec;
    rec.k = static_cast<int>(log_.records.size()) + 1;
    rec.t0 = plan.t0;
    rec.tf = plan.tf;
    rec.d_star = plan.d_star;
    rec.energy_C = plan.traj_C.energy();
    rec.energy_i = plan.traj_i ? plan.traj_i->energy() : 0.0;
    rec.energy_i1 = plan.traj_i1 ? plan.traj_i1->energy() : 0.0;
    rec.relaxations = plan.relaxations;
    rec.c_id = plan.c_id;
    rec.i_id = plan.i_id;
    rec.i1_id = plan.i1_id;
    rec.status = plan.status;
    log_.records.push_back(rec);
    if (plan.executes()) {
      busy_until_ = plan.tf + t_lat_;
      last_tf_ = plan.tf;
      return plan;
    }
    blocked_until_[trigger.c_id] = now + abort_wait_;
  }
  return std::nullopt;
}

}  // namespace lanechange
