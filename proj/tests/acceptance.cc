// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <thread>

#include "lanechange/config.h"
#include "lanechange/experiment.h"
#include "lanechange/ocp.h"
#include "lanechange/oracle.h"
#include "qp_grid.h"

using namespace lanechange;

namespace {

const std::string kConfigs = LANECHANGE_CONFIGS;
int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

bool within_rel(double x, double ref, double rel) { return std::abs(x - ref) <= rel * std::abs(ref); }

ocp::CavCProblem problem_of(const config::CaseSpec& c) {
  return ocp::CavCProblem::make(c.C, c.U, c.t0, c.params, c.bounds, c.speeds, c.safety);
}

/// Worst safety slack seen on the case-study trajectories (criterion 9).
double case_slack = INFINITY;

void table_case_1() {
  const auto spec = config::load_case(kConfigs + "/cases/case1.toml");
  const auto p = problem_of(spec);
  Stopwatch sw;
  auto s = ocp::solve_cav_c_free_time(p, spec.params.effective_beta(spec.bounds), spec.params.T_th);
  const double t = sw.seconds();
  if (!s) return report(1, false, "solver failed: " + s.failure().message);
  case_slack = std::min(case_slack, p.min_safety_slack(s->traj));
  const bool shape = s->shape == ocp::Shape::kAccelOnly;
  const bool tf = within_rel(s->tf_star - spec.t0, 3.58, 0.15);
  const bool v = std::abs(s->terminal_speed - 30.9) <= 1.0;
  report(1, shape && tf && v && t < 1.0,
         fmt("shape=%s tf*=%.3f s (3.58 +-15%%) v(tf)=%.2f m/s (30.9 +-1.0) runtime=%.3f s",
             std::string(ocp::to_string(s->shape)).c_str(), s->tf_star - spec.t0,
             s->terminal_speed, t));
}

void table_case_2() {
  const auto spec = config::load_case(kConfigs + "/cases/case2.toml");
  const auto p = problem_of(spec);
  Stopwatch sw;
  auto s = ocp::solve_cav_c_free_time(p, spec.params.effective_beta(spec.bounds), spec.params.T_th);
  const double t = sw.seconds();
  if (!s) {
    return report(2, false,
                  fmt("solver reports infeasible (%s) runtime=%.3f s; expected decel_then_accel "
                      "with a coast, tf* 13.03 +-15%%",
                      s.failure().message.c_str(), t));
  }
  case_slack = std::min(case_slack, p.min_safety_slack(s->traj));
  const bool shape = s->shape == ocp::Shape::kDecelThenAccel && ocp::has_interior_coast(s->traj);
  const bool tf = within_rel(s->tf_star - spec.t0, 13.03, 0.15);
  report(2, shape && tf && t < 1.0,
         fmt("shape=%s coast=%d tf*=%.3f s (13.03 +-15%%) runtime=%.3f s",
             std::string(ocp::to_string(s->shape)).c_str(), ocp::has_interior_coast(s->traj),
             s->tf_star - spec.t0, t));
}

void table_case_3() {
  const auto spec = config::load_case(kConfigs + "/cases/case3.toml");
  const auto p = problem_of(spec);
  auto s = ocp::min_energy_fixed_time(p, spec.tf);
  if (!s) return report(3, false, "solver failed: " + s.failure().message);
  case_slack = std::min(case_slack, p.min_safety_slack(s->traj));
  const ocp::Shape shape = ocp::classify_shape(s->traj);
  const double v = s->traj.end_state().v;
  report(3, shape == ocp::Shape::kDecelThenAccel && std::abs(v - 30.6) <= 1.0,
         fmt("tf'=%.2f s shape=%s v(tf)=%.2f m/s (30.6 +-1.0)", spec.tf,
             std::string(ocp::to_string(shape)).c_str(), v));
}

void oracle_equivalence() {
  const ControlBounds cb{-7.0, 3.3};
  const SpeedBounds sb{16.0, 33.0};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  Stopwatch sw;
  int fe_bad = 0;
  double fe_worst = 0;
  for (int k = 0; k < 200; ++k) {
    const double v0 = 16 + 17 * u(rng), T = 1 + 11 * u(rng);
    const auto iv = ocp::feasible_terminal_interval({0, v0}, 0, T, cb, sb);
    const double xf = iv.x_lo + (iv.x_hi - iv.x_lo) * (0.02 + 0.96 * u(rng));
    auto a = ocp::solve_energy_fixed_endpoint({0, v0}, 0, T, xf, cb, sb);
    auto b = oracle::fixed_endpoint({0, v0}, T, xf, cb, sb, 0.05);
    if (!a || !b) {
      ++fe_bad;
      continue;
    }
    const double rel = std::abs(a->energy() - b->energy) / std::max(b->energy, 1e-6);
    fe_worst = std::max(fe_worst, rel);
    if (rel > 0.02) ++fe_bad;
  }
  // CAV C fixed-time instances drawn until 100 are feasible for the oracle;
  // infeasibility verdicts must agree along the way.
  int cc_bad = 0, cc_n = 0, cc_drawn = 0;
  double cc_worst = 0;
  while (cc_n < 100) {
    ++cc_drawn;
    ocp::CavCProblem p;
    p.c0 = {0, 16 + 17 * u(rng)};
    p.u0 = {0, 16};
    p.safety.phi = 0.5 + 0.2 * u(rng);
    p.u0.x = 1 + 60 * u(rng) + safe_distance(p.c0.v, p.safety);
    const double T = 0.5 + 14 * u(rng);
    auto a = ocp::min_energy_fixed_time(p, T);
    auto b = oracle::cav_c_fixed_time(p, T, 0.05);
    if (a.ok() != b.ok()) {
      ++cc_bad;
      if (b.ok()) ++cc_n;
      continue;
    }
    if (!b) continue;
    ++cc_n;
    const double rel = std::abs(a->energy - b->energy) / std::max(b->energy, 1e-6);
    cc_worst = std::max(cc_worst, rel);
    if (rel > 0.02) ++cc_bad;
  }
  const double t = sw.seconds();
  report(4, fe_bad == 0 && cc_bad == 0 && t < 120.0,
         fmt("fixed-endpoint 200: %d mismatches (worst %.3f%%); CAV C %d feasible of %d drawn: "
             "%d mismatches (worst %.3f%%); dt=0.05 s, runtime=%.1f s",
             fe_bad, 100 * fe_worst, cc_n, cc_drawn, cc_bad, 100 * cc_worst, t));
}

void qp_vs_grid() {
  std::mt19937_64 rng(2);
  Stopwatch sw;
  int bad = 0, feasible = 0;
  for (int k = 0; k < 100; ++k) {
    const auto in = testing::random_pair_instance(rng);
    const auto s = coop::pair_terminal_qp(in);
    const auto g = testing::grid_minimum(in, 0.1);
    if (!g.d_min) {
      if (s.feasible) ++bad;
      continue;
    }
    if (!s.feasible) {
      ++bad;
      continue;
    }
    ++feasible;
    if (s.d_star > *g.d_min + 1e-9) ++bad;
    if (*g.d_min - s.d_star > 2 * g.max_abs_delta * 0.1 + 0.01) ++bad;
  }
  const double t = sw.seconds();
  report(5, bad == 0 && t < 60.0,
         fmt("100 instances (%d feasible): %d worse than the 0.1 m grid, runtime=%.2f s", feasible,
             bad, t));
}

void free_time_certificate() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  const ControlBounds cb{-7.0, 3.3};
  const double beta = derive_beta(0.4, cb);
  const double T_th = 12.0;
  int ok = 0, viol = 0, unsafe = 0;
  for (int k = 0; k < 500; ++k) {
    ocp::CavCProblem p;
    p.u0 = {0, 16};
    p.c0 = {0, 16 + 17 * u(rng)};
    p.safety.phi = 0.5 + 0.2 * u(rng);
    p.u0.x = 80 * u(rng) + safe_distance(p.c0.v, p.safety);
    const double b = k % 3 == 0 ? beta : 0.2 * beta * u(rng);
    auto s = ocp::solve_cav_c_free_time(p, b, T_th);
    if (!s) continue;
    ++ok;
    if (p.min_safety_slack(s->traj) < -1e-6) ++unsafe;
    if (s->shape == ocp::Shape::kDegenerateZeroTime) {
      // tf* = t0 is the boundary; only the right-hand neighbour exists.
      if (ocp::free_time_objective(p, b, T_th, s->tf_star + 0.05) < s->cost) ++viol;
      continue;
    }
    const double g = ocp::free_time_objective(p, b, T_th, s->tf_star);
    if (ocp::free_time_objective(p, b, T_th, s->tf_star - 0.05) < g ||
        ocp::free_time_objective(p, b, T_th, s->tf_star + 0.05) < g) {
      ++viol;
    }
  }
  report(6, viol == 0 && unsafe == 0,
         fmt("500 instances, %d solved: %d certificate violations, %d unsafe", ok, viol, unsafe));
}

void throughput_and_safety() {
  const auto spec = config::load_experiment(kConfigs + "/experiments/throughput.toml");
  const int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  Stopwatch sw;
  const auto first = experiment::run_all(spec, jobs, false);
  const double t = sw.seconds();
  const auto cells = experiment::summarize(spec, first);
  auto mean_flow = [&](const std::string& label) {
    for (const auto& c : cells) {
      if (c.label == label) return c.flow_all.mean;
    }
    return std::nan("");
  };
  const double sys = mean_flow("system_centric");
  const double nc = mean_flow("no_cooperation");
  const double vc = mean_flow("vehicle_centric");
  int failed = 0;
  for (const auto& c : cells) failed += c.failed;
  const double gain = (sys - nc) / nc;
  report(7, failed == 0 && sys > nc && nc > vc && gain >= 0.10 && t < 600.0,
         fmt("mean flow over %zu seeds: system_centric %.1f, no_cooperation %.1f, "
             "vehicle_centric %.1f veh/h; gain %+.1f%% (need > ordering and >= 10%%); "
             "failed runs %d, runtime=%.1f s",
             spec.seeds.size(), sys, nc, vc, 100 * gain, failed, t));

  const auto second = experiment::run_all(spec, jobs, false);
  int differing = 0;
  for (std::size_t k = 0; k < first.size(); ++k) {
    if (first[k].report.empty() || first[k].report != second[k].report) ++differing;
  }
  report(8, differing == 0,
         fmt("%zu cells x seeds rerun: %d reports differ", first.size(), differing));

  double worst = 0.0;
  int invalid = 0, breaches = 0;
  for (const auto* runs : {&first, &second}) {
    for (const auto& r : *runs) {
      if (r.invariant_breach) ++breaches;
      if (!r.metrics) continue;
      worst = std::max(worst, r.metrics->max_safety_violation);
      invalid += r.metrics->invalid_plans;
    }
  }
  worst = std::max(worst, -std::min(case_slack, 0.0));
  report(9, worst <= 1e-3 && invalid == 0 && breaches == 0,
         fmt("max margin violation %.3g m over %zu runs and the case studies (limit 1e-3); "
             "invalid plans %d; invariant breaches %d",
             worst, first.size() + second.size(), invalid, breaches));
}

}  // namespace

int main() {
  table_case_1();
  table_case_2();
  table_case_3();
  oracle_equivalence();
  qp_vs_grid();
  free_time_certificate();
  throughput_and_safety();
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
