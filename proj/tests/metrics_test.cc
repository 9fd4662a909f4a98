#include <gtest/gtest.h>

#include <vector>

#include "lanechange/metrics.h"

namespace lanechange::metrics {
namespace {

std::vector<double> evenly(int n, double t0, double window) {
  std::vector<double> ts;
  for (int k = 0; k < n; ++k) ts.push_back(t0 + window * (k + 0.5) / n);
  return ts;
}

TEST(Throughput, TableExamples) {
  EXPECT_DOUBLE_EQ(throughput(evenly(50, 60, 120), 60, 120).flow, 1500.0);
  EXPECT_DOUBLE_EQ(throughput(evenly(37, 60, 120), 60, 120).flow, 1110.0);
  const Throughput none = throughput({}, 60, 120);
  EXPECT_EQ(none.count, 0);
  EXPECT_DOUBLE_EQ(none.flow, 0.0);
}

TEST(Throughput, WindowIsInclusive) {
  const std::vector<double> ts{59.999, 60.0, 120.0, 180.0, 180.001};
  EXPECT_EQ(throughput(ts, 60, 120).count, 3);
  EXPECT_THROW(throughput(ts, 60, 0), std::invalid_argument);
}

ManeuverRecord record(double d, PlanStatus status) {
  ManeuverRecord r;
  r.d_star = d;
  r.status = status;
  return r;
}

TEST(AggregateDisruption, Examples) {
  ManeuverLog log;
  EXPECT_DOUBLE_EQ(aggregate_disruption(log), 0.0);
  log.records = {record(0, PlanStatus::kPlanned), record(12.5, PlanStatus::kPlanned),
                 record(3, PlanStatus::kPlanned)};
  EXPECT_DOUBLE_EQ(aggregate_disruption(log), 15.5);
  log.records = {record(4, PlanStatus::kAbortedInfeasible), record(9, PlanStatus::kAbortedTimeout)};
  EXPECT_DOUBLE_EQ(aggregate_disruption(log), 0.0);
}

TEST(Compute, SegmentsAndAverages) {
  sim::SimConfig cfg;
  cfg.measurement_point = 1000;
  cfg.warmup = 10;
  cfg.measurement_window = 100;
  sim::SimResult r;
  r.crossings = {
      {1, 50, 10, 0, 0},   // 40 s over 1000 m
      {2, 60, 10, 0, 1},   // 50 s over 1000 m
      {3, 200, 150, 0, 0}, // outside the window
      {4, 30, 5, 500, 0},  // U-style mid-road entry: 25 s over 500 m
  };
  r.log.records = {record(2.0, PlanStatus::kPlanned), record(1.0, PlanStatus::kFallbackSelfish)};
  const RunMetrics m = compute(r, cfg);
  EXPECT_EQ(m.all.vehicle_count, 3);
  EXPECT_DOUBLE_EQ(m.all.flow, 3 * 36.0);
  EXPECT_NEAR(m.all.avg_travel_time, (40 + 50 + 25) / 3.0, 1e-12);
  EXPECT_NEAR(m.all.avg_speed, (25 + 20 + 20) / 3.0, 1e-12);
  EXPECT_EQ(m.slow_origin.vehicle_count, 2);
  EXPECT_DOUBLE_EQ(m.d_total, 2.0);
  EXPECT_DOUBLE_EQ(m.d_total_executed, 3.0);
  EXPECT_EQ(m.maneuver_stats.at("fallback_selfish"), 1);
  EXPECT_EQ(m.maneuver_stats.at("aborted_timeout"), 0);
}

TEST(Report, EchoesConfigAndSeed) {
  sim::SimConfig cfg;
  cfg.seed = 42;
  const std::string a = run_report(cfg, compute({}, cfg));
  const auto doc = nlohmann::json::parse(a);
  EXPECT_EQ(doc.at("seed"), 42);
  EXPECT_EQ(doc.at("config").at("mode"), "system_centric");
  EXPECT_EQ(doc.at("metrics").at("all_vehicles").at("vehicle_count"), 0);
  EXPECT_EQ(a, run_report(cfg, compute({}, cfg)));
}

}  // namespace
}  // namespace lanechange::metrics
