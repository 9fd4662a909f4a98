#include "lanechange/experiment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <thread>

#include "lanechange/ocp.h"

namespace lanechange::experiment {
namespace {

RunOutcome run_one(const config::ExperimentSpec& spec, const config::Cell& cell,
                   std::uint64_t seed, bool traces) {
  RunOutcome out;
  out.cell = cell.label;
  out.seed = seed;
  sim::SimConfig cfg = spec.cell_config(cell, seed);
  try {
    std::ostringstream trace;
    const bool want_trace = traces && cfg.trace_interval > 0.0;
    sim::SimResult result = sim::run(cfg, want_trace ? &trace : nullptr);
    out.metrics = metrics::compute(result, cfg);
    out.report = metrics::run_report(cfg, *out.metrics);
    if (want_trace) out.trace = trace.str();
  } catch (const sim::InvariantBreach& e) {
    out.invariant_breach = true;
    out.error = e.what();
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

nlohmann::json to_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

Result<CaseReport> run_case(const config::CaseSpec& spec) {
  const ocp::CavCProblem p = ocp::CavCProblem::make(spec.C, spec.U, spec.t0, spec.params,
                                                    spec.bounds, spec.speeds, spec.safety);
  const double beta = spec.params.effective_beta(spec.bounds);
  ocp::CavCSolution sol;
  if (spec.relaxed) {
    auto fixed = ocp::min_energy_fixed_time(p, spec.tf);
    if (!fixed) return fixed.failure();
    sol.tf_star = spec.tf;
    sol.traj = fixed->traj;
    sol.energy = fixed->energy;
    sol.cost = beta * (spec.tf - spec.t0) + fixed->energy;
    sol.terminal_speed = fixed->traj.end_state().v;
    sol.shape = ocp::classify_shape(fixed->traj);
  } else {
    auto free = ocp::solve_cav_c_free_time(p, beta, spec.params.T_th);
    if (!free) return free.failure();
    sol = *free;
  }

  CaseReport out;
  const VehicleState end = sol.traj.end_state();
  out.report = {
      {"name", spec.name},
      {"relaxed", spec.relaxed},
      {"t0", spec.t0},
      {"initial", {{"x_U", spec.U.x}, {"v_U", spec.U.v}, {"x_C", spec.C.x}, {"v_C", spec.C.v}}},
      {"d_start", spec.d_start},
      {"beta", beta},
      {"tf", sol.tf_star},
      {"duration", sol.tf_star - spec.t0},
      {"x_C_tf", end.x},
      {"v_C_tf", sol.terminal_speed},
      {"energy", sol.energy},
      {"cost", sol.cost},
      {"shape", std::string(ocp::to_string(sol.shape))},
      {"interior_coast", ocp::has_interior_coast(sol.traj)},
      {"min_safety_slack", p.min_safety_slack(sol.traj)},
  };

  std::ostringstream csv;
  csv << "t,x_C,v_C,u_C,x_U,gap,safe_distance\n";
  csv.precision(10);
  const double T = sol.tf_star - spec.t0;
  const int n = static_cast<int>(std::ceil(T / spec.sample_dt - 1e-9));
  for (int k = 0; k <= n; ++k) {
    const double t = std::min(spec.t0 + k * spec.sample_dt, sol.tf_star);
    const VehicleState c = sol.traj.state_at(t);
    const double xu = project_constant_speed(spec.U, spec.t0, t);
    csv << t << ',' << c.x << ',' << c.v << ',' << sol.traj.control_at(t) << ',' << xu << ','
        << xu - c.x << ',' << safe_distance(c.v, spec.safety) << '\n';
  }
  out.trajectory_csv = csv.str();
  return out;
}

std::vector<RunOutcome> run_all(const config::ExperimentSpec& spec, int jobs, bool traces) {
  const std::size_t n = spec.cells.size() * spec.seeds.size();
  std::vector<RunOutcome> outcomes(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      const auto& cell = spec.cells[k / spec.seeds.size()];
      outcomes[k] = run_one(spec, cell, spec.seeds[k % spec.seeds.size()], traces);
    }
  };
  const int workers = std::clamp<int>(jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  std::vector<std::jthread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  return outcomes;
}

Stat mean_std(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= xs.size();
  if (xs.size() < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / (xs.size() - 1));
  return s;
}

std::vector<CellSummary> summarize(const config::ExperimentSpec& spec,
                                   const std::vector<RunOutcome>& outcomes) {
  std::vector<CellSummary> cells;
  for (const config::Cell& cell : spec.cells) {
    CellSummary s;
    s.label = cell.label;
    std::vector<const metrics::RunMetrics*> ok;
    for (const RunOutcome& o : outcomes) {
      if (o.cell != cell.label) continue;
      ++s.runs;
      if (o.metrics) {
        ok.push_back(&*o.metrics);
      } else {
        ++s.failed;
      }
    }
    auto stat = [&](const std::function<double(const metrics::RunMetrics&)>& f) {
      std::vector<double> xs;
      for (const auto* m : ok) xs.push_back(f(*m));
      return mean_std(xs);
    };
    s.flow_all = stat([](const auto& m) { return m.all.flow; });
    s.flow_slow = stat([](const auto& m) { return m.slow_origin.flow; });
    s.travel_time_all = stat([](const auto& m) { return m.all.avg_travel_time; });
    s.travel_time_slow = stat([](const auto& m) { return m.slow_origin.avg_travel_time; });
    s.speed_all = stat([](const auto& m) { return m.all.avg_speed; });
    s.speed_slow = stat([](const auto& m) { return m.slow_origin.avg_speed; });
    s.energy = stat([](const auto& m) { return m.total_energy; });
    s.d_total = stat([](const auto& m) { return m.d_total; });
    s.lane_changes = stat([](const auto& m) { return double(m.lane_changes); });
    cells.push_back(s);
  }
  return cells;
}

nlohmann::json to_json(const std::vector<CellSummary>& cells) {
  nlohmann::json out = nlohmann::json::object();
  for (const CellSummary& s : cells) {
    out[s.label] = {{"runs", s.runs},
                    {"failed", s.failed},
                    {"flow_all", to_json(s.flow_all)},
                    {"flow_slow_origin", to_json(s.flow_slow)},
                    {"travel_time_all", to_json(s.travel_time_all)},
                    {"travel_time_slow_origin", to_json(s.travel_time_slow)},
                    {"speed_all", to_json(s.speed_all)},
                    {"speed_slow_origin", to_json(s.speed_slow)},
                    {"total_energy", to_json(s.energy)},
                    {"d_total", to_json(s.d_total)},
                    {"lane_changes", to_json(s.lane_changes)}};
  }
  return out;
}

std::string format_table(const std::vector<CellSummary>& cells) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %5s %17s %17s %15s %15s %13s\n", "cell", "runs",
                "flow all (veh/h)", "flow slow (veh/h)", "tt all (s)", "speed all (m/s)",
                "D_total (m^2)");
  os << line;
  for (const CellSummary& s : cells) {
    std::snprintf(line, sizeof line,
                  "%-18s %5d %8.1f +- %5.1f %8.1f +- %5.1f %7.2f +- %4.2f %7.2f +- %4.2f %7.1f +- %4.1f\n",
                  s.label.c_str(), s.runs - s.failed, s.flow_all.mean, s.flow_all.std,
                  s.flow_slow.mean, s.flow_slow.std, s.travel_time_all.mean, s.travel_time_all.std,
                  s.speed_all.mean, s.speed_all.std, s.d_total.mean, s.d_total.std);
    os << line;
  }
  return os.str();
}

}  // namespace lanechange::experiment
