#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>

#include "sddtmpc/geometry.hpp"

namespace sddtmpc {

/// Discrete-time LTI plant x+ = Ax + Bu (+ disturbance).
struct LinearSystem {
  Matrix A;
  Matrix B;
  double Ts = 0.1;  // [s]

  LinearSystem() = default;
  LinearSystem(Matrix a, Matrix b, double ts) : A(std::move(a)), B(std::move(b)), Ts(ts) {
    if (A.rows() != A.cols() || B.rows() != A.rows() || Ts <= 0.0)
      throw std::invalid_argument("LinearSystem: inconsistent dimensions");
  }
};

inline double spectral_radius(const Matrix& M) {
  return M.eigenvalues().cwiseAbs().maxCoeff();
}

/// Discrete LQR gain in the u = +K x convention (A + BK Schur stable),
/// solved by Riccati value iteration to relative tolerance `tol`.
inline Matrix dlqr(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                   double tol = 1e-12, int max_iter = 100000) {
  Matrix P = Q;
  for (int it = 0; it < max_iter; ++it) {
    const Matrix K = (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
    const Matrix Pn = Q + A.transpose() * P * A - A.transpose() * P * B * K;
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    if ((Pn - P).cwiseAbs().maxCoeff() < tol * scale) {
      return -(R + B.transpose() * Pn * B).ldlt().solve(B.transpose() * Pn * A);
    }
    P = Pn;
  }
  throw std::runtime_error("dlqr: Riccati iteration did not converge");
}

enum class LyapOrientation {
  cost_to_go,  // X = A' X A + Q  (value of sum of stage costs along the loop)
  gramian,     // X = A X A' + Q
};

/// Fixed-point solve of the discrete Lyapunov equation in either orientation.
/// Converges iff rho(A) < 1; divergence is detected and reported.
inline Matrix dlyap_fixed_point(const Matrix& A, const Matrix& Q, LyapOrientation orient,
                                double tol = 1e-12, int max_iter = 100000) {
  Matrix X = Matrix::Zero(A.rows(), A.cols());
  const double q0 = std::max(1.0, Q.cwiseAbs().maxCoeff());
  for (int it = 0; it < max_iter; ++it) {
    const Matrix Xn = (orient == LyapOrientation::cost_to_go)
                          ? Matrix(A.transpose() * X * A + Q)
                          : Matrix(A * X * A.transpose() + Q);
    const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
    if ((Xn - X).cwiseAbs().maxCoeff() < tol * scale) return Xn;
    if (Xn.cwiseAbs().maxCoeff() > 1e18 * q0)
      throw std::runtime_error("dlyap: iteration diverges, rho(A) >= 1 (rho = " +
                               std::to_string(spectral_radius(A)) + ")");
    X = Xn;
  }
  throw std::runtime_error("dlyap: fixed point not reached");
}

/// Terminal cost matrix for the closed loop A+BK with stage weights (Q, R):
/// the Lyapunov solution of the accumulated quadratic cost. The `gramian`
/// orientation reproduces the published holonomic-case matrix.
inline Matrix terminal_cost(const Matrix& A, const Matrix& B, const Matrix& K, const Matrix& Q,
                            const Matrix& R, LyapOrientation orient = LyapOrientation::gramian) {
  const Matrix Acl = A + B * K;
  const Matrix Qbar = Q + K.transpose() * R * K;
  Matrix F = dlyap_fixed_point(Acl, Qbar, orient);
  F = 0.5 * (F + F.transpose());  // symmetrize
  return F;
}

/// Facet template for invariant-set work: the base directions plus their
/// forward images under A_cl', deduplicated by angle. A template that is
/// (nearly) closed under d -> A_cl'd keeps the template hull of a reach set
/// from bulging when it is mapped again, which is what makes the invariance
/// check below pass exactly.
inline Matrix reach_closed_template(const Matrix& Acl, const Matrix& base, int generations = 1000,
                                    double angle_tol = 1e-3) {
  std::vector<Vector> dirs;
  const auto push_unique = [&dirs, angle_tol](const Vector& d) {
    const double n = d.norm();
    if (n < 1e-12) return;
    const Vector u = d / n;
    for (const auto& e : dirs)
      if (e.dot(u) > 1.0 - 0.5 * angle_tol * angle_tol) return;
    dirs.push_back(u);
  };
  for (Eigen::Index i = 0; i < base.rows(); ++i) push_unique(base.row(i).transpose());
  size_t lo = 0;
  for (int g = 0; g < generations; ++g) {
    const size_t hi = dirs.size();
    for (size_t i = lo; i < hi; ++i) push_unique(Acl.transpose() * dirs[i]);
    if (dirs.size() == hi) break;
    lo = hi;
  }
  Matrix T(dirs.size(), Acl.cols());
  for (size_t i = 0; i < dirs.size(); ++i) T.row(i) = dirs[i].transpose();
  return T;
}

/// (1+eps)-outer approximation of the minimal robust positive invariant set of
/// e+ = A_cl e + w, w in W, on the facet template `tmpl`. Offsets are the
/// support-exact partial Minkowski sums, run until the geometric tail is
/// negligible, then inflated by (1+eps). With a reach-closed template the
/// result satisfies A_cl*E (+) W subset E.
inline TemplatePolytope mrpi_approx(const Matrix& Acl, const TemplatePolytope& W,
                                    const Matrix& tmpl, double eps = 0.01, int s_cap = 200) {
  const Eigen::Index m = tmpl.rows();
  Vector off = Vector::Zero(m);
  Matrix Aj = Matrix::Identity(Acl.rows(), Acl.cols());
  double prev_inc = -1.0, rho_hat = 0.0;
  for (int s = 1; s <= s_cap; ++s) {
    double inc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double h = support(W, Aj.transpose() * tmpl.row(i).transpose());
      off(i) += h;
      inc = std::max(inc, h);
    }
    Aj = Acl * Aj;
    if (prev_inc > 0.0) rho_hat = std::min(0.95, std::max(rho_hat, inc / prev_inc));
    const double scale = std::max(off.maxCoeff(), 1e-12);
    if (inc <= 1e-15 * scale && s > 1) return TemplatePolytope(tmpl, off);  // exact series
    prev_inc = inc;
    const double tail = inc * (rho_hat > 0 ? rho_hat / (1.0 - rho_hat) : 1.0);
    if (s > 2 && tail <= 1e-9 * scale) {
      const double alpha = tail / scale;
      return TemplatePolytope(tmpl, (1.0 + eps) * off / (1.0 - alpha));
    }
  }
  throw std::runtime_error("mrpi_approx: no convergence within step cap (spectral radius too "
                           "close to 1?)");
}

/// Maximal positive invariant set of z+ = A_cl z inside the state constraints,
/// seeded with {z : K_term z in U}. Preimage facets are added only when they
/// cut the current set; redundant facets are pruned exactly, so invariance and
/// admissibility are preserved. Empty results are flagged by the caller via
/// is_empty.
inline TemplatePolytope max_positive_invariant(const Matrix& Acl, const TemplatePolytope& X,
                                               const TemplatePolytope& U, const Matrix& K_term,
                                               int iter_cap = 100) {
  Matrix N(X.facets() + U.facets(), X.dim());
  N << X.normals, U.normals * K_term;
  Vector b(X.facets() + U.facets());
  b << X.offsets, U.offsets;
  // normalize rows so support comparisons are scale-free
  for (Eigen::Index i = 0; i < N.rows(); ++i) {
    const double ni = N.row(i).norm();
    if (ni < 1e-12) throw std::invalid_argument("max_positive_invariant: zero facet row");
    N.row(i) /= ni;
    b(i) /= ni;
  }
  TemplatePolytope Omega(N, b);
  for (int it = 0; it < iter_cap; ++it) {
    // candidate preimage facets {z : a'(A_cl z) <= b}
    std::vector<Vector> add_n;
    std::vector<double> add_b;
    for (Eigen::Index i = 0; i < Omega.facets(); ++i) {
      Vector an = Acl.transpose() * Omega.normals.row(i).transpose();
      const double nn = an.norm();
      if (nn < 1e-12) continue;
      an /= nn;
      const double ab = Omega.offsets(i) / nn;
      if (support(Omega, an) > ab + 1e-9) {
        add_n.push_back(an);
        add_b.push_back(ab);
      }
    }
    if (add_n.empty()) return Omega;  // fixpoint: already invariant
    Matrix N2(Omega.facets() + static_cast<Eigen::Index>(add_n.size()), Omega.dim());
    Vector b2(N2.rows());
    N2.topRows(Omega.facets()) = Omega.normals;
    b2.head(Omega.facets()) = Omega.offsets;
    for (size_t k = 0; k < add_n.size(); ++k) {
      N2.row(Omega.facets() + static_cast<Eigen::Index>(k)) = add_n[k].transpose();
      b2(Omega.facets() + static_cast<Eigen::Index>(k)) = add_b[k];
    }
    Omega = TemplatePolytope(N2, b2);
    // exact redundancy pruning
    std::vector<int> keep;
    for (Eigen::Index j = 0; j < Omega.facets(); ++j) {
      Matrix Nk(Omega.facets() - 1, Omega.dim());
      Vector bk(Omega.facets() - 1);
      Eigen::Index r = 0;
      for (Eigen::Index i = 0; i < Omega.facets(); ++i) {
        if (i == j) continue;
        Nk.row(r) = Omega.normals.row(i);
        bk(r) = Omega.offsets(i);
        ++r;
      }
      TemplatePolytope rest(Nk, bk);
      bool essential = true;
      try {
        essential = support(rest, Omega.normals.row(j).transpose()) > Omega.offsets(j) + 1e-9;
      } catch (const std::runtime_error&) {
        essential = true;  // dropping j would unbound the set
      }
      if (essential) keep.push_back(static_cast<int>(j));
    }
    if (keep.size() < static_cast<size_t>(Omega.facets())) {
      Matrix Nk(keep.size(), Omega.dim());
      Vector bk(keep.size());
      for (size_t i = 0; i < keep.size(); ++i) {
        Nk.row(i) = Omega.normals.row(keep[i]);
        bk(i) = Omega.offsets(keep[i]);
      }
      Omega = TemplatePolytope(Nk, bk);
    }
  }
  return Omega;  // iteration cap reached; still admissible, possibly not invariant
}

/// Discrete decay factor of the scalar loop  e' = -k e  under zero-order hold.
inline double zoh_scalar(double k_continuous, double Ts) {
  if (k_continuous < 0.0) throw std::invalid_argument("zoh_scalar: k must be >= 0");
  return std::exp(-k_continuous * Ts);
}

/// Classical RK4 step with zero-order-held input and disturbance.
template <typename F>
Vector rk4_step(F&& f, const Vector& x, const Vector& u, const Vector& w, double Ts) {
  const Vector k1 = f(x, u, w);
  const Vector k2 = f(x + 0.5 * Ts * k1, u, w);
  const Vector k3 = f(x + 0.5 * Ts * k2, u, w);
  const Vector k4 = f(x + Ts * k3, u, w);
  return x + (Ts / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Offline synthesis products for the linear tube controllers.
struct SynthesisResult {
  Matrix K;                // ancillary feedback, u = K e
  Matrix kappa_gain;       // terminal LQR law kappa(z) = kappa_gain z
  Matrix F;                // terminal cost matrix
  TemplatePolytope Emax;   // fixed tube cross-section (4-D)
  TemplatePolytope Zf;     // terminal set for the nominal state (4-D)
  TemplatePolytope Zf_tight;  // terminal set computed in tube-tightened sets
};

}  // namespace sddtmpc
