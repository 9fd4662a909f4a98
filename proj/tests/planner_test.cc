#include <gtest/gtest.h>

#include <cmath>

#include "lanechange/planner.h"

namespace lanechange {
namespace {

SnapshotVehicle sv(int id, double x, double v, Role role) { return {id, {x, v}, role, {1.5, 0.6}}; }

ScenarioSnapshot table_scenario(std::vector<SnapshotVehicle> fast) {
  ScenarioSnapshot s;
  s.t = 0.0;
  s.slow_lane = {sv(1, 935, 16, Role::kU), sv(2, 865, 23, Role::kC)};
  s.fast_lane = std::move(fast);
  return s;
}

PlannerConfig default_config() {
  PlannerConfig c;
  c.params.T_th = 15.0;
  return c;
}

TEST(Trigger, Examples) {
  EXPECT_TRUE(should_trigger(70, 0, 70));
  EXPECT_FALSE(should_trigger(71, 0, 70));
  EXPECT_TRUE(should_trigger(14, 0, 70));
}

TEST(Snapshot, Validation) {
  ScenarioSnapshot s = table_scenario({});
  EXPECT_NO_THROW(s.validate());
  s.slow_lane.push_back(sv(3, 900, 20, Role::kCav));  // out of order
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = table_scenario({});
  s.slow_lane.insert(s.slow_lane.begin() + 1, sv(3, 900, 16, Role::kCav));  // C not behind U
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(PlanManeuver, GenerousGapsPlanWithoutDisruption) {
  // Fast-lane traffic well clear of C's terminal position on both sides.
  const ScenarioSnapshot s = table_scenario({sv(10, 1100, 29, Role::kCav), sv(11, 700, 29, Role::kCav)});
  const ManeuverPlan p = plan_maneuver(s, default_config());
  ASSERT_EQ(p.status, PlanStatus::kPlanned) << p.reason;
  EXPECT_EQ(p.relaxations, 0);
  EXPECT_DOUBLE_EQ(p.d_star, 0.0);
  EXPECT_TRUE(validate_plan(p, s, default_config()).empty());
}

TEST(PlanManeuver, EmptyFastLane) {
  const ScenarioSnapshot s = table_scenario({});
  const ManeuverPlan p = plan_maneuver(s, default_config());
  ASSERT_EQ(p.status, PlanStatus::kPlanned) << p.reason;
  EXPECT_FALSE(p.i_id.has_value());
  EXPECT_FALSE(p.i1_id.has_value());
}

// One fast-lane CAV level with C's terminal position at tf*: no slot can be
// opened within tf*, one relaxation to 14.65 s leaves it far ahead.
struct RelaxationScenario {
  ScenarioSnapshot snapshot;
  PlannerConfig config;
};

RelaxationScenario relaxation_scenario() {
  RelaxationScenario r;
  r.config = default_config();
  auto p = ocp::CavCProblem::make({865, 23}, {935, 16}, 0.0, r.config.params, r.config.bounds,
                                  r.config.speeds, {1.5, 0.6});
  auto free = ocp::solve_cav_c_free_time(p, r.config.params.effective_beta(r.config.bounds),
                                         r.config.params.T_th);
  const double tf = free.value().tf_star;
  const double xc = free.value().traj.end_state().x;
  r.config.params.lambda_tf = 14.65 / tf;
  r.snapshot = table_scenario({sv(10, xc - 29 * tf, 29, Role::kCav)});
  return r;
}

TEST(PlanManeuver, RelaxesOnceToTheTableHorizon) {
  const auto [s, cfg] = relaxation_scenario();
  const ManeuverPlan p = plan_maneuver(s, cfg);
  ASSERT_EQ(p.status, PlanStatus::kPlanned) << p.reason;
  EXPECT_GE(p.relaxations, 1);
  EXPECT_NEAR(p.tf, 14.65, 1e-9);
  EXPECT_LE(p.d_star, cfg.params.D_th);
  EXPECT_TRUE(validate_plan(p, s, cfg).empty());
}

TEST(PlanManeuver, ZeroDisruptionBudgetTimesOut) {
  // A platoon spaced 30 m apart: every slot needs a few metres of yielding,
  // whatever the horizon. At tf* the slot around C needs +0.7 m from i and
  // -3.5 m from i+1, both reachable.
  std::vector<SnapshotVehicle> platoon;
  for (int k = 0; k < 40; ++k) platoon.push_back(sv(10 + k, 1602 - 30.0 * k, 25, Role::kCav));
  const ScenarioSnapshot s = table_scenario(platoon);
  PlannerConfig cfg = default_config();
  cfg.params.D_th = 0.0;
  cfg.params.relaxation = true;
  const ManeuverPlan p = plan_maneuver(s, cfg);
  EXPECT_EQ(p.status, PlanStatus::kAbortedTimeout) << p.reason;
  EXPECT_FALSE(p.executes());

  auto free = ocp::solve_cav_c_free_time(
      ocp::CavCProblem::make({865, 23}, {935, 16}, 0, cfg.params, cfg.bounds, cfg.speeds, {1.5, 0.6}),
      cfg.params.effective_beta(cfg.bounds), cfg.params.T_th);
  const double bound = std::ceil(std::log(cfg.params.T_th / free.value().tf_star) /
                                 std::log(cfg.params.lambda_tf)) + 1;
  EXPECT_LE(p.relaxations, bound);

  cfg.params.selfish_fallback = true;
  const ManeuverPlan f = plan_maneuver(s, cfg);
  EXPECT_EQ(f.status, PlanStatus::kFallbackSelfish) << f.reason;
  EXPECT_TRUE(validate_plan(f, s, cfg).empty());
}

TEST(PlanManeuver, InfeasibleCavCProblemAborts) {
  ScenarioSnapshot s;
  s.slow_lane = {sv(1, 290, 16, Role::kU), sv(2, 272, 17, Role::kC)};
  const ManeuverPlan p = plan_maneuver(s, default_config());
  EXPECT_EQ(p.status, PlanStatus::kAbortedInfeasible);
}

TEST(PlanManeuver, Deterministic) {
  const auto [s, cfg] = relaxation_scenario();
  const ManeuverPlan a = plan_maneuver(s, cfg);
  const ManeuverPlan b = plan_maneuver(s, cfg);
  EXPECT_EQ(a.tf, b.tf);
  EXPECT_EQ(a.d_star, b.d_star);
  EXPECT_EQ(a.energy(), b.energy());
  EXPECT_EQ(a.i_id, b.i_id);
}

TEST(PlanSelfish, KeepsOwnHorizon) {
  const ScenarioSnapshot s = table_scenario({sv(10, 1100, 29, Role::kCav), sv(11, 700, 29, Role::kCav)});
  const ManeuverPlan p = plan_selfish(s, default_config());
  ASSERT_EQ(p.status, PlanStatus::kFallbackSelfish) << p.reason;
  EXPECT_EQ(p.relaxations, 0);
  EXPECT_TRUE(validate_plan(p, s, default_config()).empty());
}

// Scheduler with a stub planner: every maneuver lasts `duration` seconds.
struct Stub {
  double duration = 10.0;
  std::vector<double> d_stars;
  std::size_t next = 0;
  ManeuverPlan operator()(const ScenarioSnapshot& s) {
    ManeuverPlan p;
    p.t0 = s.t;
    p.tf = s.t + duration;
    p.status = PlanStatus::kPlanned;
    p.d_star = next < d_stars.size() ? d_stars[next++] : 0.0;
    return p;
  }
};

ScenarioSnapshot at(double t) {
  ScenarioSnapshot s;
  s.t = t;
  return s;
}

TEST(Scheduler, TriggersFarApartBothRun) {
  SequentialScheduler sch(Stub{}, 2.0, 5.0);
  auto provider = [](const Trigger& tr) { return std::optional(at(tr.t)); };
  sch.submit({0.0, 2, 1});
  ASSERT_TRUE(sch.poll(0.0, provider).has_value());
  EXPECT_TRUE(sch.busy(11.9));
  EXPECT_FALSE(sch.busy(12.0));
  sch.submit({30.0, 3, 1});
  ASSERT_TRUE(sch.poll(30.0, provider).has_value());
  const auto& r = sch.log().records;
  ASSERT_EQ(r.size(), 2u);
  EXPECT_GE(r[1].t0, r[0].tf);
}

TEST(Scheduler, QueuesWhileBusy) {
  SequentialScheduler sch(Stub{}, 2.0, 5.0);
  double now = 0.0;
  auto provider = [&](const Trigger&) { return std::optional(at(now)); };
  sch.submit({0.0, 2, 1});
  sch.poll(now, provider);
  now = 5.0;
  sch.submit({5.0, 3, 1});
  EXPECT_FALSE(sch.poll(now, provider).has_value());
  EXPECT_EQ(sch.queued(), 1u);
  now = 12.0;
  auto p = sch.poll(now, provider);
  ASSERT_TRUE(p.has_value());
  EXPECT_DOUBLE_EQ(p->t0, 12.0);
  EXPECT_EQ(sch.queued(), 0u);
}

TEST(Scheduler, StaleTriggerIsDropped) {
  SequentialScheduler sch(Stub{}, 2.0, 5.0);
  sch.submit({0.0, 2, 1});
  auto none = [](const Trigger&) { return std::optional<ScenarioSnapshot>(); };
  EXPECT_FALSE(sch.poll(0.0, none).has_value());
  EXPECT_EQ(sch.queued(), 0u);
  EXPECT_TRUE(sch.log().records.empty());
}

TEST(Scheduler, AbortBlocksRetry) {
  auto aborting = [](const ScenarioSnapshot& s) {
    ManeuverPlan p;
    p.t0 = p.tf = s.t;
    p.status = PlanStatus::kAbortedInfeasible;
    return p;
  };
  SequentialScheduler sch(aborting, 2.0, 5.0);
  auto provider = [](const Trigger& tr) { return std::optional(at(tr.t)); };
  sch.submit({0.0, 2, 1});
  EXPECT_FALSE(sch.poll(0.0, provider).has_value());
  sch.submit({1.0, 2, 1});
  EXPECT_EQ(sch.queued(), 0u);
  sch.submit({5.0, 2, 1});
  EXPECT_EQ(sch.queued(), 1u);
}

TEST(ManeuverLog, DisruptionTotal) {
  SequentialScheduler sch(Stub{1.0, {0.0, 12.5, 3.0}}, 0.0, 5.0);
  auto provider = [](const Trigger& tr) { return std::optional(at(tr.t)); };
  for (int k = 0; k < 3; ++k) {
    sch.submit({10.0 * k, 2 + k, 1});
    sch.poll(10.0 * k, provider);
  }
  EXPECT_DOUBLE_EQ(sch.log().d_total(), 15.5);
  EXPECT_EQ(sch.log().counts_by_status().at("planned"), 3);
}

}  // namespace
}  // namespace lanechange
