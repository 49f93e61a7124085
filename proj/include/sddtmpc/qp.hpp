#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sddtmpc {

/// Dense convex QP:  min 1/2 x'Hx + f'x  s.t.  A_in x <= b_in,  A_eq x = b_eq.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  Eigen::MatrixXd A_eq;  // may be 0 x n
  Eigen::VectorXd b_eq;
};

/// Outcome of one QP/PSO solve; `feasible` iff constraint_violation <= 1e-6.
struct SolveReport {
  Eigen::VectorXd solution;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double constraint_violation = 0.0;
  int iterations_used = 0;
  double wall_time = 0.0;  // [s]
  bool feasible = false;
};

/// Goldfarb-Idnani dual active-set method for strictly convex QPs. Starts from
/// the unconstrained minimum and adds violated constraints one at a time, so
/// infeasibility shows up as an unbounded dual step and is reported exactly.
class QpSolver {
 public:
  explicit QpSolver(double tol = 1e-10) : tol_(tol) {}

  SolveReport solve(const QpProblem& qp) const {
    const auto t_start = std::chrono::steady_clock::now();
    const int n = static_cast<int>(qp.H.rows());
    const int p = static_cast<int>(qp.A_eq.rows());
    const int m = static_cast<int>(qp.A_in.rows());
    if (qp.H.cols() != n || qp.f.size() != n || (m && qp.A_in.cols() != n) ||
        (p && qp.A_eq.cols() != n))
      throw std::invalid_argument("QpSolver: inconsistent dimensions");
    if ((qp.H - qp.H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, qp.H.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("QpSolver: H not symmetric");

    SolveReport rep;
    // Cholesky with a small ridge fallback for semidefinite H
    Eigen::LLT<Eigen::MatrixXd> llt(qp.H);
    Eigen::MatrixXd Hr = qp.H;
    if (llt.info() != Eigen::Success) {
      const double ridge = 1e-10 * std::max(1.0, qp.H.trace() / n);
      Hr += ridge * Eigen::MatrixXd::Identity(n, n);
      llt.compute(Hr);
      if (llt.info() != Eigen::Success)
        throw std::invalid_argument("QpSolver: H not positive definite");
    }
    const Eigen::MatrixXd L = llt.matrixL();
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n);
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(J);  // J = L^-T

    Eigen::VectorXd x = -llt.solve(qp.f);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
    std::vector<int> active;      // constraint ids; 0..p-1 equalities, p+j inequalities
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n + 1);
    int q = 0;
    int iters = 0;
    const int iter_cap = 10 * (m + p) + 50;

    // normal and rhs in the ">= 0" convention: c(x) = np'x + bp >= 0
    const auto constraint = [&](int id, Eigen::VectorXd* np, double* bp) {
      if (id < p) {
        *np = qp.A_eq.row(id).transpose();
        *bp = -qp.b_eq(id);
      } else {
        *np = -qp.A_in.row(id - p).transpose();
        *bp = qp.b_in(id - p);
      }
    };

    const auto add_constraint = [&](Eigen::VectorXd d) {
      // rotate d(q..n-1) onto d(q), updating J's columns
      for (int j = n - 1; j > q; --j) {
        const double a = d(j - 1), b = d(j);
        const double h = std::hypot(a, b);
        if (h == 0.0) continue;
        const double cc = a / h, ss = b / h;
        Eigen::VectorXd t1 = J.col(j - 1), t2 = J.col(j);
        J.col(j - 1) = cc * t1 + ss * t2;
        J.col(j) = -ss * t1 + cc * t2;
        d(j - 1) = h;
        d(j) = 0.0;
      }
      R.col(q).head(q + 1) = d.head(q + 1);
      ++q;
    };

    const auto drop_constraint = [&](int l) {
      // remove active[l], re-triangularize R
      active.erase(active.begin() + l);
      for (int i = l; i < q - 1; ++i) {
        R.col(i).head(q) = R.col(i + 1).head(q);
        u(i) = u(i + 1);
      }
      u(q - 1) = u(q);
      R.col(q - 1).setZero();
      --q;
      for (int i = l; i < q; ++i) {
        const double a = R(i, i), b = R(i + 1, i);
        const double h = std::hypot(a, b);
        if (h == 0.0) continue;
        const double cc = a / h, ss = b / h;
        for (int j = i; j < q; ++j) {
          const double r1 = R(i, j), r2 = R(i + 1, j);
          R(i, j) = cc * r1 + ss * r2;
          R(i + 1, j) = -ss * r1 + cc * r2;
        }
        Eigen::VectorXd t1 = J.col(i), t2 = J.col(i + 1);
        J.col(i) = cc * t1 + ss * t2;
        J.col(i + 1) = -ss * t1 + cc * t2;
      }
    };

    int pending = 0;  // equality constraints processed so far
    Eigen::VectorXd np(n);
    double bp = 0.0;
    int ip = -1;

    while (iters++ < iter_cap) {
      // pick the next constraint to satisfy
      double worst = tol_ * (1.0 + x.cwiseAbs().maxCoeff());
      ip = -1;
      if (pending < p) {
        ip = pending;
      } else {
        for (int j = 0; j < m; ++j) {
          bool in_active = false;
          for (int id : active)
            if (id == p + j) { in_active = true; break; }
          if (in_active) continue;
          const double viol = qp.A_in.row(j) * x - qp.b_in(j);
          if (viol > worst) {
            worst = viol;
            ip = p + j;
          }
        }
      }
      if (ip < 0) break;  // all satisfied: optimal
      constraint(ip, &np, &bp);
      double u_ip = 0.0;

      // inner loop: take (possibly several partial) steps toward constraint ip
      for (;;) {
        const Eigen::VectorXd d = J.transpose() * np;
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
        if (q < n) z = J.rightCols(n - q) * d.tail(n - q);
        Eigen::VectorXd r;
        if (q > 0)
          r = R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));

        // partial step bound from active inequality multipliers
        double t1 = std::numeric_limits<double>::infinity();
        int l_drop = -1;
        for (int k = 0; k < q; ++k) {
          if (active[k] < p) continue;  // equalities never leave
          if (r(k) > 1e-12) {
            const double t = u(k) / r(k);
            if (t < t1) {
              t1 = t;
              l_drop = k;
            }
          }
        }
        const double s = np.dot(x) + bp;  // negative when violated
        const double zn = z.dot(np);
        const double t2 = (std::abs(zn) > 1e-14) ? -s / zn
                                                 : std::numeric_limits<double>::infinity();
        const double t = std::min(t1, t2);

        if (!std::isfinite(t)) {
          // dual unbounded: constraints inconsistent
          rep.solution = x;
          rep.objective = 0.5 * x.dot(qp.H * x) + qp.f.dot(x);
          rep.constraint_violation = max_violation(qp, x);
          rep.feasible = false;
          rep.iterations_used = iters;
          rep.wall_time = elapsed(t_start);
          return rep;
        }

        if (std::isfinite(t2)) x += t * z;
        for (int k = 0; k < q; ++k) u(k) -= t * r(k);
        u_ip += t;

        if (t == t2 && std::abs(np.dot(x) + bp) < 1e-7 * (1.0 + std::abs(bp))) {
          // full step: constraint ip becomes active
          active.push_back(ip);
          u(q) = u_ip;
          add_constraint(d);
          if (ip < p) ++pending;
          break;
        }
        if (l_drop < 0) {
          // cannot make progress: treat as infeasible
          rep.solution = x;
          rep.objective = 0.5 * x.dot(qp.H * x) + qp.f.dot(x);
          rep.constraint_violation = max_violation(qp, x);
          rep.feasible = false;
          rep.iterations_used = iters;
          rep.wall_time = elapsed(t_start);
          return rep;
        }
        drop_constraint(l_drop);
      }
    }

    rep.solution = x;
    rep.objective = 0.5 * x.dot(qp.H * x) + qp.f.dot(x);
    rep.constraint_violation = max_violation(qp, x);
    rep.feasible = rep.constraint_violation <= 1e-6;
    rep.iterations_used = iters;
    rep.wall_time = elapsed(t_start);
    return rep;
  }

 private:
  static double max_violation(const QpProblem& qp, const Eigen::VectorXd& x) {
    double v = 0.0;
    if (qp.A_in.rows()) v = std::max(v, (qp.A_in * x - qp.b_in).maxCoeff());
    if (qp.A_eq.rows()) v = std::max(v, (qp.A_eq * x - qp.b_eq).cwiseAbs().maxCoeff());
    return std::max(v, 0.0);
  }
  static double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  double tol_;
};

}  // namespace sddtmpc
