#include "lanechange/qp.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace lanechange::qp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class DualActiveSet {
 public:
  DualActiveSet(const Problem& p, const Options& o)
      : p_(p), o_(o), n_(static_cast<int>(p.g.size())) {}

  Result<Solution> run() {
    check_shapes();
    Eigen::LLT<Eigen::MatrixXd> llt(p_.G);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("qp: G must be positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    J_ = L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n_, n_));
    R_ = Eigen::MatrixXd::Zero(n_, n_);
    d_.resize(n_);
    z_.resize(n_);
    r_.resize(n_);
    x_ = -llt.solve(p_.g);
    j_scale_ = J_.cwiseAbs().maxCoeff();

    for (int i = 0; i < p_.A_eq.rows(); ++i) {
      const Eigen::VectorXd np = p_.A_eq.row(i).transpose();
      step_directions(np);
      const double zn = z_.dot(np);
      const double t = significant(np) ? (p_.b_eq(i) - np.dot(x_)) / zn : 0.0;
      x_ += t * z_;
      for (int k = 0; k < iq_; ++k) u_[k] -= t * r_(k);
      u_.push_back(t);
      active_.push_back(-(i + 1));
      if (!add_constraint()) {
        return Failure{FailureKind::kInvalidInput, "qp: linearly dependent equality constraints", {}};
      }
    }

    std::vector<char> is_active(p_.A_in.rows(), 0);
    int iterations = 0;
    while (true) {
      if (++iterations > o_.max_iterations) {
        return Failure{FailureKind::kInfeasible, "qp: iteration limit reached", {}};
      }
      // Most violated inactive inequality.
      int ip = -1;
      double worst = -o_.feasibility_tol;
      if (p_.A_in.rows() > 0) {
        const Eigen::VectorXd s = p_.A_in * x_ - p_.b_in;
        for (int i = 0; i < s.size(); ++i) {
          const double scaled = s(i) / std::max(1.0, p_.A_in.row(i).norm());
          if (!is_active[i] && scaled < worst) {
            worst = scaled;
            ip = i;
          }
        }
      }
      if (ip < 0) break;

      const Eigen::VectorXd np = p_.A_in.row(ip).transpose();
      double u_new = 0.0;
      while (true) {
        step_directions(np);
        // Partial (dual) step bound from active inequality multipliers.
        double t1 = kInf;
        int drop = -1;
        for (int k = 0; k < iq_; ++k) {
          if (active_[k] >= 0 && r_(k) > 0.0 && u_[k] / r_(k) < t1) {
            t1 = u_[k] / r_(k);
            drop = k;
          }
        }
        const double t2 = significant(np) ? (p_.b_in(ip) - np.dot(x_)) / z_.dot(np) : kInf;
        const double t = std::min(t1, t2);
        if (!std::isfinite(t)) {
          return Failure{FailureKind::kInfeasible, "qp: constraints are inconsistent",
                         p_.b_in(ip) - np.dot(x_)};
        }
        if (std::isfinite(t2)) x_ += t * z_;
        for (int k = 0; k < iq_; ++k) u_[k] -= t * r_(k);
        u_new += t;
        if (t == t2) {
          u_.push_back(u_new);
          active_.push_back(ip);
          if (add_constraint()) {
            is_active[ip] = 1;
          } else {
            u_.pop_back();
            active_.pop_back();
          }
          break;
        }
        is_active[active_[drop]] = 0;
        delete_constraint(drop);
      }
    }

    Solution sol;
    sol.x = x_;
    sol.objective = 0.5 * x_.dot(p_.G * x_) + p_.g.dot(x_);
    sol.iterations = iterations;
    if (p_.A_eq.rows() > 0) {
      sol.max_violation = (p_.A_eq * x_ - p_.b_eq).cwiseAbs().maxCoeff();
    }
    if (p_.A_in.rows() > 0) {
      sol.max_violation =
          std::max(sol.max_violation, (p_.b_in - p_.A_in * x_).cwiseMax(0.0).maxCoeff());
    }
    return sol;
  }

 private:
  void check_shapes() const {
    if (p_.G.rows() != n_ || p_.G.cols() != n_) throw std::invalid_argument("qp: G shape");
    if (p_.A_eq.rows() > 0 && (p_.A_eq.cols() != n_ || p_.b_eq.size() != p_.A_eq.rows())) {
      throw std::invalid_argument("qp: equality shape");
    }
    if (p_.A_in.rows() > 0 && (p_.A_in.cols() != n_ || p_.b_in.size() != p_.A_in.rows())) {
      throw std::invalid_argument("qp: inequality shape");
    }
  }

  bool significant(const Eigen::VectorXd& np) const {
    return z_.norm() > 1e-12 * j_scale_ * j_scale_ * std::max(1.0, np.norm());
  }

  /// d = J'n, z = J2 d2 (primal step), r = R^-1 d1 (dual step).
  void step_directions(const Eigen::VectorXd& np) {
    d_.noalias() = J_.transpose() * np;
    z_.noalias() = J_.rightCols(n_ - iq_) * d_.tail(n_ - iq_);
    if (iq_ > 0) {
      r_.head(iq_) = R_.topLeftCorner(iq_, iq_).triangularView<Eigen::Upper>().solve(d_.head(iq_));
    }
  }

  bool add_constraint() {
    for (int j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d_(j - 1);
      double ss = d_(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d_(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d_(j - 1) = -h;
      } else {
        d_(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n_; ++k) {
        const double a = J_(k, j - 1);
        const double b = J_(k, j);
        J_(k, j - 1) = a * cc + b * ss;
        J_(k, j) = xny * (a + J_(k, j - 1)) - b;
      }
    }
    ++iq_;
    R_.col(iq_ - 1).head(iq_) = d_.head(iq_);
    if (std::abs(d_(iq_ - 1)) <= std::numeric_limits<double>::epsilon() * r_norm_) {
      // Dependent normal: undo the bookkeeping, the rotations keep J orthogonal.
      R_.col(iq_ - 1).setZero();
      --iq_;
      return false;
    }
    r_norm_ = std::max(r_norm_, std::abs(d_(iq_ - 1)));
    return true;
  }

  void delete_constraint(int pos) {
    active_.erase(active_.begin() + pos);
    u_.erase(u_.begin() + pos);
    for (int i = pos; i < iq_ - 1; ++i) R_.col(i) = R_.col(i + 1);
    R_.col(iq_ - 1).setZero();
    --iq_;
    for (int j = pos; j < iq_; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq_; ++k) {
        const double a = R_(j, k);
        const double b = R_(j + 1, k);
        R_(j, k) = a * cc + b * ss;
        R_(j + 1, k) = xny * (a + R_(j, k)) - b;
      }
      for (int k = 0; k < n_; ++k) {
        const double a = J_(k, j);
        const double b = J_(k, j + 1);
        J_(k, j) = a * cc + b * ss;
        J_(k, j + 1) = xny * (J_(k, j) + a) - b;
      }
    }
  }

  const Problem& p_;
  const Options& o_;
  int n_;
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd x_, d_, z_, r_;
  std::vector<double> u_;
  std::vector<int> active_;  // equality i stored as -(i + 1)
  int iq_ = 0;
  double r_norm_ = 1.0;
  double j_scale_ = 1.0;
};

}  // namespace

Result<Solution> solve(const Problem& problem, const Options& options) {
  return DualActiveSet(problem, options).run();
}

}  // namespace lanechange::qp
