#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lanechange/ocp.h"
#include "lanechange/oracle.h"
#include "lanechange/qp.h"

namespace lanechange {
namespace {

const ControlBounds kBounds{-7.0, 3.3};
const SpeedBounds kSpeeds{16.0, 33.0};

TEST(Qp, SimpleBoxProblem) {
  // min 0.5(x^2 + y^2) - x - y  s.t.  x + y = 1, x >= 0.8.
  qp::Problem p;
  p.G = Eigen::Matrix2d::Identity();
  p.g = Eigen::Vector2d(-1, -1);
  p.A_eq = Eigen::RowVector2d(1, 1);
  p.b_eq = Eigen::VectorXd::Constant(1, 1.0);
  p.A_in = Eigen::RowVector2d(1, 0);
  p.b_in = Eigen::VectorXd::Constant(1, 0.8);
  auto s = qp::solve(p);
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s->x(0), 0.8, 1e-9);
  EXPECT_NEAR(s->x(1), 0.2, 1e-9);
}

TEST(Qp, DetectsEmptyFeasibleSet) {
  qp::Problem p;
  p.G = Eigen::Matrix<double, 1, 1>::Identity();
  p.g = Eigen::VectorXd::Zero(1);
  p.A_in.resize(2, 1);
  p.A_in << 1, -1;
  p.b_in = Eigen::Vector2d(2, -1);  // x >= 2 and x <= 1
  EXPECT_FALSE(qp::solve(p).ok());
}

TEST(Oracle, FixedEndpointConvergesToClosedForm) {
  auto o = oracle::fixed_endpoint({0, 20}, 4, 88, {-100, 100}, {0.1, 100});
  ASSERT_TRUE(o.ok());
  EXPECT_NEAR(o->energy, 1.5, 0.02 * 1.5);
}

TEST(Oracle, ZeroControlInstance) {
  auto o = oracle::fixed_endpoint({0, 20}, 4, 80, kBounds, kSpeeds);
  ASSERT_TRUE(o.ok());
  EXPECT_NEAR(o->energy, 0.0, 1e-9);
}

TEST(Oracle, TerminalIntervalAgreesWithOracleFeasibility) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 20; ++k) {
    const double v0 = 17 + 15 * u(rng), T = 1 + 6 * u(rng);
    const auto iv = ocp::feasible_terminal_interval({0, v0}, 0, T, kBounds, kSpeeds);
    // Step off the boundary by more than the grid's reach error.
    EXPECT_TRUE(oracle::fixed_endpoint({0, v0}, T, iv.x_lo + 0.5, kBounds, kSpeeds).ok());
    EXPECT_TRUE(oracle::fixed_endpoint({0, v0}, T, iv.x_hi - 0.5, kBounds, kSpeeds).ok());
    EXPECT_FALSE(oracle::fixed_endpoint({0, v0}, T, iv.x_hi + 0.5, kBounds, kSpeeds).ok());
    EXPECT_FALSE(oracle::fixed_endpoint({0, v0}, T, iv.x_lo - 0.5, kBounds, kSpeeds).ok());
  }
}

TEST(Oracle, SmallSyntheticCavCInstance) {
  ManeuverParams mp;
  mp.v_d = 20.0;
  mp.delta_tol = 1.0;
  const SpeedBounds speeds{0.1, 33.0};
  const SafetyParams safety{1.5, 0.6};
  auto p = ocp::CavCProblem::make({0, 17}, {12, 16}, 0.0, mp, kBounds, speeds, safety);
  auto a = ocp::min_energy_fixed_time(p, 6.0);
  auto b = oracle::cav_c_fixed_time(p, 6.0);
  ASSERT_EQ(a.ok(), b.ok());
  if (a.ok()) {
    EXPECT_NEAR(a->energy, b->energy, 0.02 * std::max(b->energy, 1e-6));
  }
}

TEST(Oracle, RelaxedTableCaseMatchesAnalytic) {
  ManeuverParams mp;
  auto p = ocp::CavCProblem::make({865, 23}, {935, 16}, 0.0, mp, kBounds, kSpeeds, {1.5, 0.6});
  auto a = ocp::min_energy_fixed_time(p, 14.65);
  auto b = oracle::cav_c_fixed_time(p, 14.65);
  ASSERT_TRUE(a.ok());
  ASSERT_TRUE(b.ok());
  EXPECT_NEAR(a->energy, b->energy, 0.02 * b->energy);
}

TEST(Oracle, AnalyticFixedEndpointAgreesOnRandomInstances) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 25; ++k) {
    const double v0 = 16 + 17 * u(rng), T = 1 + 11 * u(rng);
    const auto iv = ocp::feasible_terminal_interval({0, v0}, 0, T, kBounds, kSpeeds);
    const double xf = iv.x_lo + (iv.x_hi - iv.x_lo) * (0.02 + 0.96 * u(rng));
    auto a = ocp::solve_energy_fixed_endpoint({0, v0}, 0, T, xf, kBounds, kSpeeds);
    auto b = oracle::fixed_endpoint({0, v0}, T, xf, kBounds, kSpeeds);
    ASSERT_TRUE(a.ok());
    ASSERT_TRUE(b.ok());
    EXPECT_NEAR(a->energy(), b->energy, 0.02 * std::max(b->energy, 1e-6));
  }
}

}  // namespace
}  // namespace lanechange
