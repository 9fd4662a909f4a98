#include <gtest/gtest.h>

#include <cmath>

#include "lanechange/core.h"
#include "lanechange/trajectory.h"

namespace lanechange {
namespace {

TEST(SafeDistance, Examples) {
  const SafetyParams p{1.5, 0.6};
  EXPECT_DOUBLE_EQ(safe_distance(0.0, p), 1.5);
  EXPECT_NEAR(safe_distance(16.0, p), 11.1, 1e-12);
  EXPECT_NEAR(safe_distance(29.0, p), 18.9, 1e-12);
}

TEST(SafeDistance, MonotoneInSpeed) {
  const SafetyParams p{1.5, 0.6};
  for (double v = 0.0; v < 40.0; v += 0.5) {
    EXPECT_LE(safe_distance(v, p), safe_distance(v + 0.5, p));
  }
}

TEST(ProjectConstantSpeed, Examples) {
  EXPECT_DOUBLE_EQ(project_constant_speed({100, 16}, 0, 4), 164.0);
  EXPECT_NEAR(project_constant_speed({272, 25}, 0, 3.58), 361.5, 1e-9);
  EXPECT_DOUBLE_EQ(project_constant_speed({50, 25}, 0, 0), 50.0);
}

TEST(ProjectConstantSpeed, RejectsPast) {
  EXPECT_THROW(project_constant_speed({0, 1}, 5, 4), std::invalid_argument);
}

TEST(DeriveBeta, Examples) {
  EXPECT_DOUBLE_EQ(derive_beta(0.0, {-7, 3.3}), 0.0);
  EXPECT_NEAR(derive_beta(0.4, {-7, 3.3}), 0.4 * 49 / 1.2, 1e-12);
  EXPECT_NEAR(derive_beta(0.4, {-7, 3.3}), 16.3333, 1e-4);
  EXPECT_DOUBLE_EQ(derive_beta(0.5, {-1, 1}), 0.5);
  EXPECT_THROW(derive_beta(1.0, {-7, 3.3}), std::invalid_argument);
}

TEST(Params, Invariants) {
  EXPECT_THROW((SpeedBounds{20, 10}.validate()), std::invalid_argument);
  EXPECT_THROW((SafetyParams{-1, 0.6}.validate()), std::invalid_argument);
  ManeuverParams p;
  EXPECT_NO_THROW(p.validate());
  p.lambda_tf = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Trajectory, ArcsAreContinuousAndConsistent) {
  const Trajectory t = Trajectory::Builder(1.0, {10, 20})
                           .affine(2.0, 1.5, -0.375)
                           .affine(1.0, -2.0)
                           .headway(1.5, 16.0, 0.6)
                           .build();
  EXPECT_DOUBLE_EQ(t.t0(), 1.0);
  EXPECT_NEAR(t.tf(), 5.5, 1e-12);
  // Closed-form consistency against Simpson's rule at 1 ms inside each arc.
  double energy = 0.0;
  for (const Arc& arc : t.arcs()) {
    const int n = static_cast<int>(std::round(arc.duration() / 1e-3));
    const double h = arc.duration() / n;
    for (int k = 0; k < n; ++k) {
      const double s = arc.t_start + k * h;
      const VehicleState a = arc.state_at(s), b = arc.state_at(s + h);
      const double vm = arc.state_at(s + h / 2).v;
      EXPECT_NEAR(b.x - a.x, (a.v + 4 * vm + b.v) * h / 6, 1e-9);
      const double ua = arc.control_at(s), ub = arc.control_at(s + h), um = arc.control_at(s + h / 2);
      EXPECT_NEAR(b.v - a.v, (ua + 4 * um + ub) * h / 6, 1e-9);
      energy += (ua * ua + 4 * um * um + ub * ub) / 12 * h;
    }
  }
  EXPECT_NEAR(t.energy(), energy, 1e-6 * t.energy());
}

TEST(Trajectory, ExtrapolatesAtTerminalSpeed) {
  const Trajectory t = Trajectory::cruise(0, 2, {0, 10});
  EXPECT_DOUBLE_EQ(t.state_at(3).x, 30.0);
  EXPECT_DOUBLE_EQ(t.control_at(3), 0.0);
  EXPECT_THROW(t.state_at(-1), std::invalid_argument);
}

}  // namespace
}  // namespace lanechange
