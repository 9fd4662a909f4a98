#include "lanechange/oracle.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lanechange/qp.h"

namespace lanechange::oracle {
namespace {

/// Linear maps from the control sequence to grid speeds and positions.
struct Grid {
  int n = 0;
  double h = 0.0;
  Eigen::MatrixXd V;  // row k-1: v_k - v_0
  Eigen::MatrixXd X;  // row k-1: x_k - x_0 - v_0 t_k

  Grid(double T, double dt) {
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("oracle: T and dt must be positive");
    n = std::max(1, static_cast<int>(std::lround(T / dt)));
    h = T / n;
    V = Eigen::MatrixXd::Zero(n, n);
    X = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k <= n; ++k) {
      for (int j = 0; j < k; ++j) {
        V(k - 1, j) = h;
        X(k - 1, j) = h * h * (k - j - 0.5);
      }
    }
  }
};

struct RowStack {
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  void add(const Eigen::RowVectorXd& a, double b) {
    rows.push_back(a);
    rhs.push_back(b);
  }
  void into(Eigen::MatrixXd& A, Eigen::VectorXd& b, int n) const {
    A.resize(static_cast<Eigen::Index>(rows.size()), n);
    b.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      A.row(static_cast<Eigen::Index>(i)) = rows[i];
      b(static_cast<Eigen::Index>(i)) = rhs[i];
    }
  }
};

void add_boxes(const Grid& grid, double v0, const ControlBounds& cb, const SpeedBounds& sb,
               RowStack& in) {
  for (int j = 0; j < grid.n; ++j) {
    Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(grid.n);
    e(j) = 1.0;
    in.add(e, cb.u_min);
    in.add(-e, -cb.u_max);
  }
  for (int k = 0; k < grid.n; ++k) {
    in.add(grid.V.row(k), sb.v_min - v0);
    in.add(-grid.V.row(k), v0 - sb.v_max);
  }
}

Result<OracleSolution> finish(const Grid& grid, VehicleState s, const RowStack& eq,
                              const RowStack& in) {
  qp::Problem prob;
  prob.G = grid.h * Eigen::MatrixXd::Identity(grid.n, grid.n);
  prob.g = Eigen::VectorXd::Zero(grid.n);
  eq.into(prob.A_eq, prob.b_eq, grid.n);
  in.into(prob.A_in, prob.b_in, grid.n);
  auto sol = qp::solve(prob);
  if (!sol) return sol.failure();
  OracleSolution out;
  out.dt = grid.h;
  out.energy = sol->objective;
  out.controls.assign(sol->x.data(), sol->x.data() + grid.n);
  const Eigen::VectorXd v = grid.V * sol->x;
  const Eigen::VectorXd x = grid.X * sol->x;
  out.states.push_back(s);
  for (int k = 0; k < grid.n; ++k) {
    const double t = (k + 1) * grid.h;
    out.states.push_back({s.x + s.v * t + x(k), s.v + v(k)});
  }
  return out;
}

}  // namespace

Result<OracleSolution> fixed_endpoint(VehicleState s, double T, double xf,
                                      const ControlBounds& bounds, const SpeedBounds& speeds,
                                      double dt) {
  const Grid grid(T, dt);
  RowStack eq;
  RowStack in;
  add_boxes(grid, s.v, bounds, speeds, in);
  eq.add(grid.X.row(grid.n - 1), xf - s.x - s.v * T);
  return finish(grid, s, eq, in);
}

Result<OracleSolution> cav_c_fixed_time(const ocp::CavCProblem& p, double tf, double dt) {
  const double T = tf - p.t0;
  const Grid grid(T, dt);
  const VehicleState c = p.c0;
  RowStack eq;
  RowStack in;
  add_boxes(grid, c.v, p.bounds, p.speeds, in);
  const double phi = p.safety.phi;
  for (int k = 0; k < grid.n; ++k) {
    const double t = (k + 1) * grid.h;
    const double free_slack =
        p.u0.x + p.u0.v * t - c.x - c.v * t - p.safety.delta - phi * c.v;
    in.add(-(grid.X.row(k) + phi * grid.V.row(k)), -free_slack);
  }
  in.add(grid.V.row(grid.n - 1), p.v_lo - c.v);
  in.add(-grid.V.row(grid.n - 1), c.v - p.v_hi);
  return finish(grid, c, eq, in);
}

}  // namespace lanechange::oracle
