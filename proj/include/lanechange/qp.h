#pragma once

#include <Eigen/Dense>

#include "lanechange/core.h"

namespace lanechange::qp {

/// Strictly convex dense QP
///   minimize    0.5 x'Gx + g'x
///   subject to  A_eq x  = b_eq
///               A_in x >= b_in
/// Constraints are stored one per row.
struct Problem {
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
};

struct Solution {
  Eigen::VectorXd x;
  double objective = 0.0;
  /// Largest constraint violation at x (>= 0).
  double max_violation = 0.0;
  int iterations = 0;
};

struct Options {
  double feasibility_tol = 1e-9;
  int max_iterations = 100000;
};

/// Goldfarb-Idnani dual active-set method. Reports kInfeasible when a violated
/// constraint cannot be added without the dual becoming unbounded (the primal
/// is then empty); the diagnostic carries that constraint's violation.
Result<Solution> solve(const Problem& problem, const Options& options = {});

}  // namespace lanechange::qp
