#include <gtest/gtest.h>

#include <random>

#include "lanechange/cooperation.h"
#include "qp_grid.h"

namespace lanechange::coop {
namespace {

FastLaneVehicle veh(int id, double x, double v) { return {id, {x, v}, {1.5, 0.6}}; }

TEST(CooperativeSet, ConstantSpeedWindow) {
  const std::vector<FastLaneVehicle> lane{veh(1, 80, 25), veh(2, 50, 25)};
  // i projects to 180 > 164 + 10; j projects to 150 >= 120 - 30.
  const CooperativeSet s = build_cooperative_set(lane, 164, 120, 0, 4, 10, 30);
  ASSERT_EQ(s.members.size(), 1u);
  EXPECT_EQ(s.members[0].id, 2);
  EXPECT_FALSE(s.contains(1));
  EXPECT_DOUBLE_EQ(s.t_f_star, 4.0);
  EXPECT_TRUE(build_cooperative_set({}, 164, 120, 0, 4, 10, 30).members.empty());
}

TEST(CooperativeSet, MinMaxIsSuperset) {
  const ControlBounds b{-7, 3.3};
  const SpeedBounds sp{16, 33};
  // Constant speed projects to 120; full braking to v_min reaches 78, inside
  // the window [30, 100].
  const std::vector<FastLaneVehicle> lane{veh(1, 0, 30), veh(2, -40, 25)};
  const auto cs = build_cooperative_set(lane, 90, 60, 0, 4, 10, 30);
  const auto mm = build_cooperative_set_minmax(lane, 90, 60, 0, 4, 10, 30, b, sp);
  EXPECT_FALSE(cs.contains(1));
  EXPECT_TRUE(mm.contains(1));
  for (const auto& m : cs.members) EXPECT_TRUE(mm.contains(m.id));
  EXPECT_TRUE(build_cooperative_set_minmax({}, 90, 60, 0, 4, 10, 30, b, sp).members.empty());
}

TEST(Disruption, Examples) {
  EXPECT_DOUBLE_EQ(disruption_metric(0, 0, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(disruption_metric(0, 5, 0.5), 12.5);
  EXPECT_NEAR(disruption_metric(3, 4, 0.01), 15.93, 1e-12);
}

PairQpInput base_input() {
  PairQpInput in;
  in.t0 = 0;
  in.tf = 4;
  in.gamma = 0.5;
  in.xC_tf = 110;
  in.vC_tf = 28;
  in.safety_C = {1.5, 0.6};
  return in;
}

TEST(PairQp, UnconstrainedOptimumHasZeroDisruption) {
  PairQpInput in = base_input();
  in.i = SlotVehicle{veh(1, 100, 25), true};   // projects to 200
  in.i1 = SlotVehicle{veh(2, 0, 20), true};    // projects to 80
  const PairSolution s = pair_terminal_qp(in);
  ASSERT_TRUE(s.feasible);
  EXPECT_DOUBLE_EQ(s.d_star, 0.0);
  EXPECT_DOUBLE_EQ(s.x_i_f, 200.0);
  EXPECT_DOUBLE_EQ(s.x_i1_f, 80.0);
}

TEST(PairQp, SingleActiveRearGap) {
  PairQpInput in = base_input();
  in.i = SlotVehicle{veh(1, 100, 25), true};
  in.i1 = SlotVehicle{{2, {20, 20}, {3.0, 0.6}}, true};  // projects to 100, needs 15 m
  const PairSolution s = pair_terminal_qp(in);
  ASSERT_TRUE(s.feasible);
  EXPECT_NEAR(s.x_i1_f, 95.0, 1e-9);
  EXPECT_NEAR(s.delta_i1, 5.0, 1e-9);
  EXPECT_NEAR(s.delta_i, 0.0, 1e-12);
  EXPECT_NEAR(s.d_star, 12.5, 1e-9);
}

TEST(PairQp, ScalingWithActiveSet) {
  PairQpInput in = base_input();
  in.i = SlotVehicle{veh(1, 100, 25), true};
  in.i1 = SlotVehicle{{2, {20, 20}, {3.0, 0.6}}, true};
  const double d1 = pair_terminal_qp(in).d_star;
  in.i1->vehicle.state.x = 25;  // projects to 105, shortfall 10
  EXPECT_NEAR(pair_terminal_qp(in).d_star, 4 * d1, 1e-9);
}

TEST(PairQp, InfeasibleReportsViolatedConstraint) {
  PairQpInput in = base_input();
  in.i1 = SlotVehicle{veh(2, 100, 20), false};  // pinned at 180, far past C
  const PairSolution s = pair_terminal_qp(in);
  EXPECT_FALSE(s.feasible);
  EXPECT_FALSE(s.violated.empty());
  EXPECT_GT(s.violation, 0.0);
}

TEST(PairQp, EndOfLaneSlotsIgnoreMissingSide) {
  PairQpInput in = base_input();
  in.i1 = SlotVehicle{veh(2, 0, 20), true};
  EXPECT_TRUE(pair_terminal_qp(in).feasible);
  in.i1.reset();
  in.i = SlotVehicle{veh(1, 100, 25), true};
  EXPECT_TRUE(pair_terminal_qp(in).feasible);
}

TEST(PairQp, NeverWorseThanGrid) {
  std::mt19937_64 rng(21);
  int compared = 0;
  for (int k = 0; k < 100; ++k) {
    const PairQpInput in = testing::random_pair_instance(rng);
    const PairSolution s = pair_terminal_qp(in);
    const auto g = testing::grid_minimum(in, 0.1);
    if (!g.d_min) {
      EXPECT_FALSE(s.feasible) << "instance " << k;
      continue;
    }
    ASSERT_TRUE(s.feasible) << "instance " << k;
    ++compared;
    EXPECT_LE(s.d_star, *g.d_min + 1e-9) << "instance " << k;
    EXPECT_LE(*g.d_min - s.d_star, 2 * g.max_abs_delta * 0.1 + 0.01) << "instance " << k;
    EXPECT_NEAR(s.d_star, disruption_metric(s.delta_i, s.delta_i1, in.gamma), 1e-9);
  }
  EXPECT_GT(compared, 30);
}

TEST(SelectPair, Examples) {
  PairSolution a, b, c;
  a.feasible = b.feasible = c.feasible = true;
  a.d_star = 0.0;
  EXPECT_EQ(select_optimal_pair(std::vector{a}, 25.0), 0u);
  a.d_star = 12.5;
  b.d_star = 3.0;
  c.d_star = 40.0;
  EXPECT_EQ(select_optimal_pair(std::vector{a, b, c}, 25.0), 1u);
  a.d_star = b.d_star = 30.0;
  EXPECT_FALSE(select_optimal_pair(std::vector{a, b, c}, 25.0).has_value());
}

TEST(SelectPair, TiesGoForwardAndInfeasibleIsSkipped) {
  PairSolution a, b, c;
  a.feasible = false;
  b.feasible = c.feasible = true;
  a.d_star = 0.0;
  b.d_star = c.d_star = 1.0;
  EXPECT_EQ(select_optimal_pair(std::vector{a, b, c}, 25.0), 1u);
}

}  // namespace
}  // namespace lanechange::coop
