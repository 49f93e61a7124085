#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sddtmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr double kSetTol = 1e-9;  // slack tolerance for all set-membership tests

/// Convex polytope in H-representation {x : normals*x <= offsets}.
/// Rows of `normals` are unit vectors. Sets built from a shared facet-normal
/// template stay closed under Minkowski sum / Pontryagin difference.
struct TemplatePolytope {
  Matrix normals;
  Vector offsets;

  TemplatePolytope() = default;
  TemplatePolytope(Matrix n, Vector b) : normals(std::move(n)), offsets(std::move(b)) {
    if (normals.rows() != offsets.size())
      throw std::invalid_argument("polytope: normals/offsets row mismatch");
  }

  int dim() const { return static_cast<int>(normals.cols()); }
  Eigen::Index facets() const { return normals.rows(); }

  bool contains(const Vector& x, double tol = kSetTol) const {
    return ((normals * x - offsets).array() <= tol).all();
  }

  /// Origin-centered singleton {0} on the given template.
  static TemplatePolytope zero(const Matrix& tmpl) {
    return TemplatePolytope(tmpl, Vector::Zero(tmpl.rows()));
  }
};

/// Axis-aligned box [lower, upper].
struct Box {
  Vector lower, upper;

  Box() = default;
  Box(Vector lo, Vector up) : lower(std::move(lo)), upper(std::move(up)) {
    if (lower.size() != upper.size() || (lower.array() > upper.array()).any())
      throw std::invalid_argument("box: requires lower <= upper");
  }

  int dim() const { return static_cast<int>(lower.size()); }

  TemplatePolytope to_polytope() const {
    const int d = dim();
    Matrix n = Matrix::Zero(2 * d, d);
    Vector b(2 * d);
    for (int i = 0; i < d; ++i) {
      n(2 * i, i) = 1.0;
      b(2 * i) = upper(i);
      n(2 * i + 1, i) = -1.0;
      b(2 * i + 1) = -lower(i);
    }
    return TemplatePolytope(std::move(n), std::move(b));
  }
};

/// Origin-centered ellipse; `heading` is the major-axis direction.
struct Ellipse2 {
  double r_max = 0.0;  // half major [m]
  double r_min = 0.0;  // half minor [m]
  double heading = 0.0;  // [rad]

  Ellipse2() = default;
  Ellipse2(double a, double b, double th) : r_max(a), r_min(b), heading(th) {
    if (!(r_max >= r_min && r_min >= 0.0))
      throw std::invalid_argument("ellipse: requires r_max >= r_min >= 0");
  }

  double support(const Eigen::Vector2d& d) const {
    const double c = std::cos(heading), s = std::sin(heading);
    const double du = c * d.x() + s * d.y();
    const double dv = -s * d.x() + c * d.y();
    return std::hypot(r_max * du, r_min * dv);
  }
};

// ---------------------------------------------------------------------------
// Fixed facet templates

/// 8 unit normals at 45 degree spacing, optionally rotated.
inline Matrix octagon_template(double rotation = 0.0) {
  Matrix n(8, 2);
  for (int i = 0; i < 8; ++i) {
    const double t = rotation + i * (M_PI / 4.0);
    n(i, 0) = std::cos(t);
    n(i, 1) = std::sin(t);
  }
  return n;
}

/// 16-facet 4-D template: the 2-D octagon applied to the position pair and to
/// the velocity pair. Projections onto either plane are octagons.
inline Matrix box_diag_template4() {
  const Matrix oct = octagon_template();
  Matrix n = Matrix::Zero(16, 4);
  n.block(0, 0, 8, 2) = oct;
  n.block(8, 2, 8, 2) = oct;
  return n;
}

// ---------------------------------------------------------------------------
// Dense simplex for the small support LPs

namespace detail {

enum class LpStatus { optimal, infeasible, unbounded };

/// Standard-form simplex: min c'y  s.t.  A y = b, y >= 0 (b >= 0 after setup).
/// Two phases, Bland's rule. Sized for the handful-of-rows problems here.
class Simplex {
 public:
  LpStatus solve(const Matrix& A, const Vector& b, const Vector& c, Vector* y_out,
                 double* obj_out) const {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    Matrix T(m + 1, n + m + 1);  // tableau with artificial columns
    T.setZero();
    for (int i = 0; i < m; ++i) {
      const double s = b(i) >= 0 ? 1.0 : -1.0;
      T.row(i).head(n) = s * A.row(i);
      T(i, n + i) = 1.0;
      T(i, n + m) = s * b(i);
    }
    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;

    // phase 1: minimize sum of artificials
    Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(n + m);
    cost.segment(n, m).setOnes();
    if (!run(T, basis, cost, n + m)) return LpStatus::unbounded;  // cannot happen
    double art = 0.0;
    for (int i = 0; i < m; ++i)
      if (basis[i] >= n) art += T(i, n + m);
    if (art > 1e-8) return LpStatus::infeasible;
    // drive lingering artificials out of the basis where possible
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n) continue;
      int piv = -1;
      for (int j = 0; j < n; ++j)
        if (std::abs(T(i, j)) > 1e-9) { piv = j; break; }
      if (piv >= 0) pivot(T, basis, i, piv);
    }

    // phase 2 on the original cost, artificial columns frozen
    Eigen::RowVectorXd cost2 = Eigen::RowVectorXd::Zero(n + m);
    cost2.head(n) = c.transpose();
    if (!run(T, basis, cost2, n)) return LpStatus::unbounded;

    Vector y = Vector::Zero(n);
    for (int i = 0; i < m; ++i)
      if (basis[i] < n) y(basis[i]) = T(i, n + m);
    if (y_out) *y_out = y;
    if (obj_out) *obj_out = c.dot(y);
    return LpStatus::optimal;
  }

 private:
  static void pivot(Matrix& T, std::vector<int>& basis, int row, int col) {
    T.row(row) /= T(row, col);
    for (int i = 0; i < T.rows(); ++i) {
      if (i == row) continue;
      const double f = T(i, col);
      if (f != 0.0) T.row(i) -= f * T.row(row);
    }
    basis[row] = col;
  }

  // returns false on unboundedness
  static bool run(Matrix& T, std::vector<int>& basis, Eigen::RowVectorXd cost,
                  int ncols_enter) {
    const int m = static_cast<int>(T.rows()) - 1;
    const int total = static_cast<int>(T.cols()) - 1;
    // reduced costs in the last tableau row
    T.row(m).head(total) = cost;
    T(m, total) = 0.0;
    for (int i = 0; i < m; ++i) {
      const double cb = cost(basis[i]);
      if (cb != 0.0) T.row(m) -= cb * T.row(i);
    }
    for (int iter = 0; iter < 10000; ++iter) {
      int enter = -1;
      for (int j = 0; j < ncols_enter; ++j)  // Bland: first negative
        if (T(m, j) < -1e-11) { enter = j; break; }
      if (enter < 0) return true;
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        if (T(i, enter) > 1e-11) {
          const double ratio = T(i, total) / T(i, enter);
          if (leave < 0 || ratio < best - 1e-15 ||
              (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
            leave = i;
            best = ratio;
          }
        }
      }
      if (leave < 0) return false;
      pivot(T, basis, leave, enter);
    }
    return true;  // iteration cap; tableau is tiny so this is unreachable
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Set operations

/// Support function h_P(d) = max {d.x : x in P} via the dual LP
/// min b'y s.t. N'y = d, y >= 0. Throws if P is unbounded in direction d.
inline double support(const TemplatePolytope& P, const Vector& d) {
  detail::Simplex lp;
  double obj = 0.0;
  const auto st = lp.solve(P.normals.transpose(), d, P.offsets, nullptr, &obj);
  if (st == detail::LpStatus::infeasible)
    throw std::runtime_error("support: polytope unbounded in requested direction");
  return obj;
}

/// Nonemptiness of {x : Nx <= b} by phase-1 feasibility (x split into x+ - x-).
inline bool is_empty(const TemplatePolytope& P, double tol = kSetTol) {
  const int m = static_cast<int>(P.facets());
  const int d = P.dim();
  Matrix A(m, 2 * d + m);
  A << P.normals, -P.normals, Matrix::Identity(m, m);
  Vector c = Vector::Zero(2 * d + m);
  detail::Simplex lp;
  double obj = 0.0;
  const auto st = lp.solve(A, P.offsets.array() + tol, c, nullptr, &obj);
  return st == detail::LpStatus::infeasible;
}

/// Bounded iff the support is finite along every +-axis direction.
inline bool is_bounded(const TemplatePolytope& P) {
  Vector d = Vector::Zero(P.dim());
  for (int i = 0; i < P.dim(); ++i) {
    for (double s : {1.0, -1.0}) {
      d.setZero();
      d(i) = s;
      try {
        support(P, d);
      } catch (const std::runtime_error&) {
        return false;
      }
    }
  }
  return true;
}

inline void check_same_dim(const TemplatePolytope& P, const TemplatePolytope& Q) {
  if (P.dim() != Q.dim()) throw std::invalid_argument("set op: dimension mismatch");
}

/// Tightest outer approximation of P + Q on P's template:
/// offsets_i = h_P(n_i) + h_Q(n_i). Exact when both operands share the template.
inline TemplatePolytope minkowski_sum(const TemplatePolytope& P, const TemplatePolytope& Q) {
  check_same_dim(P, Q);
  Vector b(P.facets());
  for (Eigen::Index i = 0; i < P.facets(); ++i) {
    const Vector n = P.normals.row(i).transpose();
    b(i) = support(P, n) + support(Q, n);
  }
  return TemplatePolytope(P.normals, std::move(b));
}

/// Pontryagin difference X (-) E, exact for H-rep minuend:
/// offsets_i = X.offsets_i - h_E(a_i). May come back empty (not an error).
inline TemplatePolytope pontryagin_diff(const TemplatePolytope& X, const TemplatePolytope& E) {
  check_same_dim(X, E);
  Vector b(X.facets());
  for (Eigen::Index i = 0; i < X.facets(); ++i)
    b(i) = X.offsets(i) - support(E, X.normals.row(i).transpose());
  return TemplatePolytope(X.normals, std::move(b));
}

/// Outer approximation of {Mx : x in P} on `out_template`
/// (defaults to P's template when M is square): offsets_i = h_P(M'n_i).
inline TemplatePolytope linear_map(const Matrix& M, const TemplatePolytope& P,
                                   std::optional<Matrix> out_template = std::nullopt) {
  if (M.cols() != P.dim()) throw std::invalid_argument("linear_map: dimension mismatch");
  Matrix tmpl;
  if (out_template)
    tmpl = *out_template;
  else if (M.rows() == M.cols())
    tmpl = P.normals;
  else
    throw std::invalid_argument("linear_map: non-square map needs an output template");
  Vector b(tmpl.rows());
  for (Eigen::Index i = 0; i < tmpl.rows(); ++i)
    b(i) = support(P, M.transpose() * tmpl.row(i).transpose());
  return TemplatePolytope(std::move(tmpl), std::move(b));
}

/// Exact inclusion test: h_P(a_j) <= b_j for every facet of Q.
inline bool is_subset(const TemplatePolytope& P, const TemplatePolytope& Q,
                      double tol = kSetTol) {
  check_same_dim(P, Q);
  for (Eigen::Index j = 0; j < Q.facets(); ++j)
    if (support(P, Q.normals.row(j).transpose()) > Q.offsets(j) + tol) return false;
  return true;
}

/// Tightest offsets on the polytope's own template (drops redundancy slack).
inline TemplatePolytope canonicalized(const TemplatePolytope& P) {
  Vector b(P.facets());
  for (Eigen::Index i = 0; i < P.facets(); ++i)
    b(i) = support(P, P.normals.row(i).transpose());
  return TemplatePolytope(P.normals, std::move(b));
}

/// Intersection by stacking facets (exact).
inline TemplatePolytope intersect(const TemplatePolytope& P, const TemplatePolytope& Q) {
  check_same_dim(P, Q);
  Matrix n(P.facets() + Q.facets(), P.dim());
  n << P.normals, Q.normals;
  Vector b(P.facets() + Q.facets());
  b << P.offsets, Q.offsets;
  return TemplatePolytope(std::move(n), std::move(b));
}

/// Tangential (outer) polygon of an ellipse with `n_edges` facets. Tangent
/// points are evenly spaced in the circle preimage of the ellipse, the first
/// facet normal pointing along the rotated major axis; the area overshoot then
/// equals the circle case, (n/pi)tan(pi/n). Degenerate r_max = 0 collapses to
/// the singleton {0}.
inline TemplatePolytope circumscribe_ellipse(const Ellipse2& e, int n_edges) {
  if (n_edges < 4 || n_edges % 2 != 0)
    throw std::invalid_argument("circumscribe_ellipse: n_edges must be even and >= 4");
  const double c = std::cos(e.heading), s = std::sin(e.heading);
  Matrix n(n_edges, 2);
  Vector b(n_edges);
  for (int i = 0; i < n_edges; ++i) {
    const double phi = i * (2.0 * M_PI / n_edges);
    // outward normal at the tangent point, back in world coordinates
    Eigen::Vector2d g(e.r_max > 0 ? std::cos(phi) / e.r_max : std::cos(phi),
                      e.r_min > 0 ? std::sin(phi) / e.r_min : std::sin(phi));
    if (g.norm() < 1e-300) g = Eigen::Vector2d(1.0, 0.0);
    g.normalize();
    n(i, 0) = c * g.x() - s * g.y();
    n(i, 1) = s * g.x() + c * g.y();
    b(i) = e.support(n.row(i).transpose());
  }
  return TemplatePolytope(std::move(n), std::move(b));
}

/// Lift a planar disturbance set to the 4-D state space as W2 x {0}^2
/// (velocity components pinned by paired zero-offset facets).
inline TemplatePolytope embed_position_disturbance(const TemplatePolytope& W2) {
  if (W2.dim() != 2) throw std::invalid_argument("embed: expects a 2-D set");
  const Eigen::Index m = W2.facets();
  Matrix n = Matrix::Zero(m + 4, 4);
  Vector b(m + 4);
  n.block(0, 0, m, 2) = W2.normals;
  b.head(m) = W2.offsets;
  n(m + 0, 2) = 1.0;
  n(m + 1, 2) = -1.0;
  n(m + 2, 3) = 1.0;
  n(m + 3, 3) = -1.0;
  b.tail(4).setZero();
  return TemplatePolytope(std::move(n), std::move(b));
}

/// Vertices of a bounded 2-D H-polytope (adjacent facet intersections kept if
/// feasible), counter-clockwise. Used where exact planar supports are needed.
inline std::vector<Eigen::Vector2d> enumerate_vertices_2d(const TemplatePolytope& P,
                                                          double tol = 1e-7) {
  if (P.dim() != 2) throw std::invalid_argument("enumerate_vertices_2d: 2-D only");
  std::vector<Eigen::Vector2d> verts;
  const Eigen::Index m = P.facets();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      Eigen::Matrix2d A;
      A.row(0) = P.normals.row(i);
      A.row(1) = P.normals.row(j);
      if (std::abs(A.determinant()) < 1e-10) continue;
      const Eigen::Vector2d v = A.inverse() * Eigen::Vector2d(P.offsets(i), P.offsets(j));
      if (((P.normals * v - P.offsets).array() <= tol).all()) {
        bool dup = false;
        for (const auto& w : verts)
          if ((w - v).norm() < 1e-9) { dup = true; break; }
        if (!dup) verts.push_back(v);
      }
    }
  }
  if (verts.size() > 2) {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& v : verts) c += v;
    c /= static_cast<double>(verts.size());
    std::sort(verts.begin(), verts.end(), [&c](const auto& a, const auto& b) {
      return std::atan2(a.y() - c.y(), a.x() - c.x()) < std::atan2(b.y() - c.y(), b.x() - c.x());
    });
  }
  return verts;
}

/// Planar convex set held by its vertices; supports are exact maxima.
/// This is the hot-path representation for tube arithmetic.
struct SupportSet2 {
  std::vector<Eigen::Vector2d> verts;

  SupportSet2() : verts{Eigen::Vector2d::Zero()} {}
  explicit SupportSet2(std::vector<Eigen::Vector2d> v) : verts(std::move(v)) {
    if (verts.empty()) verts.push_back(Eigen::Vector2d::Zero());
  }
  explicit SupportSet2(const TemplatePolytope& P) : SupportSet2(enumerate_vertices_2d(P)) {}

  double support(const Eigen::Vector2d& d) const {
    double h = verts[0].dot(d);
    for (size_t i = 1; i < verts.size(); ++i) h = std::max(h, verts[i].dot(d));
    return h;
  }
};

}  // namespace sddtmpc
