#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lanechange/core.h"
#include "lanechange/sim.h"

namespace lanechange::config {

/// Malformed or inconsistent configuration (maps to CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One row of the case-study table: fixed initial conditions for U and C.
struct CaseSpec {
  std::string name = "case";
  double t0 = 0.0;
  VehicleState U;
  VehicleState C;
  double d_start = 70.0;
  /// Solve the fixed-time relaxed problem at tf instead of the free-time one.
  bool relaxed = false;
  double tf = 0.0;
  SafetyParams safety;
  ManeuverParams params;
  ControlBounds bounds;
  SpeedBounds speeds;
  /// Trajectory CSV sample period (s).
  double sample_dt = 0.01;
};

/// One cell of an experiment: a mode plus optional parameter overrides.
struct Cell {
  std::string label;
  sim::Mode mode = sim::Mode::kSystemCentric;
  std::optional<double> gamma;
  std::optional<bool> relaxation;
  std::optional<bool> selfish_fallback;
};

struct ExperimentSpec {
  std::string name = "experiment";
  sim::SimConfig base;
  std::vector<Cell> cells;
  std::vector<std::uint64_t> seeds;
  /// Default output directory; the CLI's --out takes precedence.
  std::string output_dir;

  /// Base config with the cell's overrides and the seed applied.
  sim::SimConfig cell_config(const Cell& cell, std::uint64_t seed) const;
};

/// Parsers throw ConfigError on syntax errors, unknown keys, wrong types and
/// violated invariants.
CaseSpec parse_case(std::string_view toml_text);
ExperimentSpec parse_experiment(std::string_view toml_text);
CaseSpec load_case(const std::filesystem::path& path);
ExperimentSpec load_experiment(const std::filesystem::path& path);

}  // namespace lanechange::config
