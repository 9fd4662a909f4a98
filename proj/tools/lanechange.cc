// Command-line front end: single case studies and multi-seed experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "lanechange/config.h"
#include "lanechange/experiment.h"

namespace fs = std::filesystem;
using namespace lanechange;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kInfeasible = 3;
constexpr int kBreach = 4;

void write_file(const fs::path& path, const std::string& bytes) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << bytes;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

struct Options {
  std::string file;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> dt;
  bool quiet = false;
  int jobs = 0;
};

int run_case(const Options& o) {
  config::CaseSpec spec = config::load_case(o.file);
  if (o.dt) {
    if (!(*o.dt > 0.0)) throw config::ConfigError("--dt must be positive");
    spec.sample_dt = *o.dt;
  }
  auto result = experiment::run_case(spec);
  if (!result) {
    std::cerr << "infeasible: " << result.failure().message;
    if (result.failure().diagnostic) std::cerr << " (diagnostic " << *result.failure().diagnostic << ")";
    std::cerr << "\n";
    return kInfeasible;
  }
  const fs::path dir = o.out.empty() ? fs::path("out") / spec.name : fs::path(o.out);
  const std::string report = result->report.dump(2) + "\n";
  write_file(dir / "report.json", report);
  write_file(dir / "trajectory.csv", result->trajectory_csv);
  if (!o.quiet) std::cout << report;
  return kOk;
}

int run_experiment(const Options& o) {
  config::ExperimentSpec spec = config::load_experiment(o.file);
  if (o.seed) spec.seeds = {*o.seed};
  if (o.dt) {
    spec.base.dt = *o.dt;
    try {
      spec.base.validate();
    } catch (const std::invalid_argument& e) {
      throw config::ConfigError(e.what());
    }
  }
  fs::path dir = o.out.empty() ? fs::path(spec.output_dir.empty() ? "out/" + spec.name : spec.output_dir)
                               : fs::path(o.out);
  const int jobs = o.jobs > 0 ? o.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  const auto outcomes = experiment::run_all(spec, jobs, true);
  const auto cells = experiment::summarize(spec, outcomes);

  bool breach = false;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& r : outcomes) {
    const std::string stem = r.cell + "_seed" + std::to_string(r.seed);
    if (!r.report.empty()) write_file(dir / "runs" / (stem + ".json"), r.report);
    if (!r.trace.empty()) write_file(dir / "traces" / (stem + ".csv"), r.trace);
    if (!r.error.empty()) {
      breach = breach || r.invariant_breach;
      failures.push_back({{"cell", r.cell}, {"seed", r.seed}, {"error", r.error},
                          {"invariant_breach", r.invariant_breach}});
      std::cerr << stem << ": " << r.error << "\n";
    }
  }
  nlohmann::json summary{{"name", spec.name},
                         {"seeds", spec.seeds},
                         {"cells", experiment::to_json(cells)},
                         {"failures", failures}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  if (!o.quiet) std::cout << experiment::format_table(cells);
  return breach ? kBreach : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative lane-change planning and traffic simulation"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--dt", o.dt, "Trajectory sample period (run-case) or simulation step (run-experiment)");
    sub->add_flag("--quiet", o.quiet, "Suppress stdout");
  };
  CLI::App* case_cmd = app.add_subcommand("run-case", "Solve one CAV C case study");
  case_cmd->add_option("file", o.file, "Case TOML file")->required();
  common(case_cmd);
  CLI::App* exp_cmd = app.add_subcommand("run-experiment", "Run an experiment over cells and seeds");
  exp_cmd->add_option("file", o.file, "Experiment TOML file")->required();
  exp_cmd->add_option("--seed", o.seed, "Run only this seed");
  exp_cmd->add_option("--jobs", o.jobs, "Worker threads (default: hardware concurrency)");
  common(exp_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    return case_cmd->parsed() ? run_case(o) : run_experiment(o);
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const sim::InvariantBreach& e) {
    std::cerr << "invariant breach: " << e.what() << "\n";
    return kBreach;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
