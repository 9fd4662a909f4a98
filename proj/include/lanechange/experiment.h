#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanechange/config.h"
#include "lanechange/metrics.h"

namespace lanechange::experiment {

/// Result of one case study: the report document and the sampled trajectory.
struct CaseReport {
  nlohmann::json report;
  std::string trajectory_csv;  // t,x_C,v_C,u_C,x_U,gap,safe_distance
};
/// Solves the case (free-time, or fixed-time at spec.tf when relaxed).
Result<CaseReport> run_case(const config::CaseSpec& spec);

struct RunOutcome {
  std::string cell;
  std::uint64_t seed = 0;
  std::optional<metrics::RunMetrics> metrics;
  std::string report;  // run_report() bytes, empty on failure
  std::string trace;   // CSV, empty unless traces were requested
  std::string error;
  bool invariant_breach = false;
};

/// Runs every (cell, seed) pair on `jobs` worker threads. Outcomes are
/// ordered by cell, then seed, independent of scheduling.
std::vector<RunOutcome> run_all(const config::ExperimentSpec& spec, int jobs, bool traces);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for one run
};
Stat mean_std(const std::vector<double>& xs);

struct CellSummary {
  std::string label;
  int runs = 0;
  int failed = 0;
  Stat flow_all, flow_slow, travel_time_all, travel_time_slow, speed_all, speed_slow;
  Stat energy, d_total, lane_changes;
};

std::vector<CellSummary> summarize(const config::ExperimentSpec& spec,
                                   const std::vector<RunOutcome>& outcomes);
nlohmann::json to_json(const std::vector<CellSummary>& cells);
/// Fixed-width text table, one row per cell.
std::string format_table(const std::vector<CellSummary>& cells);

}  // namespace lanechange::experiment
