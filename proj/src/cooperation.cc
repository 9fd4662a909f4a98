#include "lanechange/cooperation.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lanechange/ocp.h"

namespace lanechange::coop {
namespace {

constexpr double kFeasTol = 1e-9;

void require_sorted(std::span<const FastLaneVehicle> lane) {
  for (std::size_t k = 1; k < lane.size(); ++k) {
    if (!(lane[k].state.x < lane[k - 1].state.x)) {
      throw std::invalid_argument("fast lane must be sorted front to rear");
    }
  }
}

template <typename Pred>
CooperativeSet filter(std::span<const FastLaneVehicle> lane, double tf, Pred&& keep) {
  require_sorted(lane);
  CooperativeSet set;
  set.t_f_star = tf;
  for (const FastLaneVehicle& v : lane) {
    if (keep(v)) set.members.push_back(v);
  }
  return set;
}

/// a . x >= b over x = (x_i, x_i1).
struct Constraint {
  std::array<double, 2> a;
  double b;
  const char* name;
  double slack(const std::array<double, 2>& x) const { return a[0] * x[0] + a[1] * x[1] - b; }
};

}  // namespace

bool CooperativeSet::contains(int id) const {
  return std::any_of(members.begin(), members.end(),
                     [id](const FastLaneVehicle& v) { return v.id == id; });
}

CooperativeSet build_cooperative_set(std::span<const FastLaneVehicle> fast_lane, double xU_tf,
                                     double xC_tf, double t0, double tf, double L_f, double L_r) {
  if (tf < t0) throw std::invalid_argument("build_cooperative_set: tf precedes t0");
  const double lo = xC_tf - L_r;
  const double hi = xU_tf + L_f;
  return filter(fast_lane, tf, [&](const FastLaneVehicle& v) {
    const double x = project_constant_speed(v.state, t0, tf);
    return x >= lo && x <= hi;
  });
}

CooperativeSet build_cooperative_set_minmax(std::span<const FastLaneVehicle> fast_lane,
                                            double xU_tf, double xC_tf, double t0, double tf,
                                            double L_f, double L_r, const ControlBounds& bounds,
                                            const SpeedBounds& speeds) {
  if (tf < t0) throw std::invalid_argument("build_cooperative_set_minmax: tf precedes t0");
  const double lo = xC_tf - L_r;
  const double hi = xU_tf + L_f;
  return filter(fast_lane, tf, [&](const FastLaneVehicle& v) {
    const ocp::TerminalInterval box =
        ocp::feasible_terminal_interval(v.state, t0, tf, bounds, speeds);
    return box.x_lo <= hi && box.x_hi >= lo;
  });
}

double disruption_metric(double delta_i, double delta_i1, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("disruption_metric: gamma must lie in [0, 1]");
  }
  return gamma * delta_i * delta_i + (1.0 - gamma) * delta_i1 * delta_i1;
}

PairSolution pair_terminal_qp(const PairQpInput& in) {
  if (!(in.tf >= in.t0)) throw std::invalid_argument("pair_terminal_qp: tf precedes t0");
  if (!(in.gamma >= 0.0 && in.gamma <= 1.0)) {
    throw std::invalid_argument("pair_terminal_qp: gamma must lie in [0, 1]");
  }
  const double T = in.tf - in.t0;
  PairSolution out;
  std::array<double, 2> target{0.0, 0.0};
  std::vector<Constraint> cons;

  auto add_box = [&](const SlotVehicle& sv, int k, const char* lo_name, const char* hi_name) {
    if (sv.cooperating) {
      const ocp::TerminalInterval box =
          ocp::feasible_terminal_interval(sv.vehicle.state, in.t0, in.tf, in.bounds, in.speeds);
      std::array<double, 2> e{0.0, 0.0};
      e[k] = 1.0;
      cons.push_back({e, box.x_lo, lo_name});
      e[k] = -1.0;
      cons.push_back({e, -box.x_hi, hi_name});
    } else {
      std::array<double, 2> e{0.0, 0.0};
      e[k] = 1.0;
      cons.push_back({e, target[k], lo_name});
      e[k] = -1.0;
      cons.push_back({e, -target[k], hi_name});
    }
  };

  if (in.i) {
    const FastLaneVehicle& v = in.i->vehicle;
    out.i_id = v.id;
    target[0] = project_constant_speed(v.state, in.t0, in.tf);
    cons.push_back({{1.0, 0.0}, in.xC_tf + safe_distance(in.vC_tf, in.safety_C), "gap_i_C"});
    if (in.leader) {
      // Worst case for i's headway: its highest reachable speed at tf.
      const double v_max_i = std::min(v.state.v + in.bounds.u_max * T, in.speeds.v_max);
      const double x_leader = project_constant_speed(*in.leader, in.t0, in.tf);
      cons.push_back({{-1.0, 0.0}, -(x_leader - safe_distance(v_max_i, v.safety)), "gap_leader_i"});
    }
    add_box(*in.i, 0, "box_i_lo", "box_i_hi");
  }
  if (in.i1) {
    const FastLaneVehicle& v = in.i1->vehicle;
    out.i1_id = v.id;
    target[1] = project_constant_speed(v.state, in.t0, in.tf);
    cons.push_back({{0.0, -1.0}, -(in.xC_tf - safe_distance(v.state.v, v.safety)), "gap_C_i1"});
    add_box(*in.i1, 1, "box_i1_lo", "box_i1_hi");
  }

  // Degenerate weights are regularized so the enumeration always has a
  // unique minimizer per active set.
  const std::array<double, 2> w{std::max(in.gamma, 1e-12), std::max(1.0 - in.gamma, 1e-12)};
  auto objective = [&](const std::array<double, 2>& x) {
    const double d0 = target[0] - x[0];
    const double d1 = target[1] - x[1];
    return w[0] * d0 * d0 + w[1] * d1 * d1;
  };
  auto worst_violation = [&](const std::array<double, 2>& x, const char** name) {
    double worst = 0.0;
    for (const Constraint& c : cons) {
      const double s = -c.slack(x);
      if (s > worst) {
        worst = s;
        if (name) *name = c.name;
      }
    }
    return worst;
  };

  std::vector<std::array<double, 2>> candidates{target};
  for (const Constraint& c : cons) {
    // Weighted projection of the target onto a . x = b.
    const double denom = c.a[0] * c.a[0] / w[0] + c.a[1] * c.a[1] / w[1];
    const double step = (c.b - (c.a[0] * target[0] + c.a[1] * target[1])) / denom;
    candidates.push_back({target[0] + step * c.a[0] / w[0], target[1] + step * c.a[1] / w[1]});
  }
  for (std::size_t p = 0; p < cons.size(); ++p) {
    for (std::size_t q = p + 1; q < cons.size(); ++q) {
      const auto& a = cons[p];
      const auto& b = cons[q];
      const double det = a.a[0] * b.a[1] - a.a[1] * b.a[0];
      if (std::abs(det) < 1e-12) continue;
      candidates.push_back({(a.b * b.a[1] - a.a[1] * b.b) / det,
                            (a.a[0] * b.b - a.b * b.a[0]) / det});
    }
  }

  const std::array<double, 2>* best = nullptr;
  double best_obj = std::numeric_limits<double>::infinity();
  const std::array<double, 2>* least_bad = nullptr;
  double least_violation = std::numeric_limits<double>::infinity();
  for (const auto& x : candidates) {
    const double viol = worst_violation(x, nullptr);
    if (viol <= kFeasTol) {
      const double obj = objective(x);
      if (obj < best_obj) {
        best_obj = obj;
        best = &x;
      }
    } else if (viol < least_violation) {
      least_violation = viol;
      least_bad = &x;
    }
  }

  const std::array<double, 2>& x = best ? *best : *least_bad;
  out.feasible = best != nullptr;
  out.x_i_f = in.i ? x[0] : 0.0;
  out.x_i1_f = in.i1 ? x[1] : 0.0;
  out.delta_i = in.i ? target[0] - x[0] : 0.0;
  out.delta_i1 = in.i1 ? target[1] - x[1] : 0.0;
  out.d_star = disruption_metric(out.delta_i, out.delta_i1, in.gamma);
  if (!out.feasible) {
    const char* name = "";
    out.violation = worst_violation(x, &name);
    out.violated = name;
  }
  return out;
}

std::optional<std::size_t> select_optimal_pair(std::span<const PairSolution> solutions,
                                               double D_th) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < solutions.size(); ++k) {
    const PairSolution& s = solutions[k];
    if (!s.feasible || s.d_star > D_th) continue;
    if (!best || s.d_star < solutions[*best].d_star) best = k;
  }
  return best;
}

}  // namespace lanechange::coop
