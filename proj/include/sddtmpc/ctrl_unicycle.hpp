#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "sddtmpc/pso.hpp"
#include "sddtmpc/synthesis.hpp"
#include "sddtmpc/world.hpp"

namespace sddtmpc {

struct Interval {
  double lo = 0.0, hi = 0.0;

  double width() const { return hi - lo; }
  double max_abs() const { return std::max(std::abs(lo), std::abs(hi)); }
  bool contains(double x, double tol = 1e-12) const { return x >= lo - tol && x <= hi + tol; }
  Interval scaled(double k) const { return k >= 0 ? Interval{k * lo, k * hi} : Interval{k * hi, k * lo}; }
  Interval plus(const Interval& o) const { return {lo + o.lo, hi + o.hi}; }
  static Interval point(double x) { return {x, x}; }
  static Interval symmetric(double r) { return {-r, r}; }
};

/// Box error set of the follower: positions [m], heading [rad].
struct UnicycleErrorBox {
  Interval e1, e2, e3;
};

/// Case-study-2 constants (e-puck geometry, published tuning).
struct UnicycleSynthesis {
  double Ts = 0.2;          // [s]
  int N = 10;
  double rho = 0.0267;      // [m]
  double nu_max = 0.13;     // [m/s] wheel speed bound
  double eta = 0.004;       // [m] disturbance norm bound
  double Ke = 2.3;          // [1/s] continuous ancillary gain
  double Ked = std::exp(-2.3 * 0.2);        // discrete position decay ~0.63
  double emax_bound = 0.2 * 0.004 / (1.0 - std::exp(-2.3 * 0.2));  // ~0.0022 m
  double v_const = 0.6636;  // fixed nominal input scaling of the baseline TMPC
  double zf_bound = 0.0542; // |z_r1| + |z_r2| terminal bound
  double Kbar = 1.2;        // terminal law gain
  double nuR = 0.015;       // leader inputs
  double omegaR = 0.04;
  Eigen::Vector2d p_d{-0.1, -0.1};  // desired offset in the leader frame
  Eigen::Matrix2d Q2 = Eigen::Vector2d(0.2, 0.2).asDiagonal();
  Eigen::Matrix2d R2 = Eigen::Vector2d(0.4, 0.4).asDiagonal();
  Eigen::Matrix2d F2 = Eigen::Vector2d(0.5, 0.5).asDiagonal();

  /// Discrete heading-error decay for forward speed v1 (exact ZOH of
  /// e3' = -(v1/rho) e3; expands for reversing inputs, still a sound map).
  double Ktheta_d(double v1) const { return std::exp(-v1 * Ts / rho); }
  /// Zero-order-hold scaling of the heading disturbance interval; the v1 -> 0
  /// limit is Ts.
  double heading_w_scale(double v1) const {
    const double a = v1 * Ts / rho;
    if (std::abs(a) < 1e-9) return Ts;
    return (1.0 - std::exp(-a)) * rho / v1;
  }
};

inline Eigen::Matrix2d heading_matrix(double psi, double rho) {
  Eigen::Matrix2d M;
  M << std::cos(psi), -rho * std::sin(psi), std::sin(psi), rho * std::cos(psi);
  return M;
}

/// Leader state at time t from the closed-form circular arc.
inline Eigen::Vector3d leader_state(const Eigen::Vector3d& x0, double nuR, double omegaR,
                                    double t) {
  if (std::abs(omegaR) < 1e-12)
    return {x0(0) + nuR * t * std::cos(x0(2)), x0(1) + nuR * t * std::sin(x0(2)), x0(2)};
  const double psi = x0(2) + omegaR * t;
  return {x0(0) + nuR / omegaR * (std::sin(psi) - std::sin(x0(2))),
          x0(1) + nuR / omegaR * (std::cos(x0(2)) - std::cos(psi)), psi};
}

/// Nominal state in the leader's frame (position offset error and heading
/// difference).
struct RelativeState {
  Eigen::Vector3d z_r = Eigen::Vector3d::Zero();
};

inline RelativeState to_leader_frame(const Eigen::Vector3d& z, const Eigen::Vector3d& xR,
                                     const Eigen::Vector2d& p_d) {
  RelativeState r;
  const double th = wrap_angle(xR(2) - z(2));
  const double c = std::cos(-z(2)), s = std::sin(-z(2));
  Eigen::Matrix2d Rz;
  Rz << c, -s, s, c;
  const double ct = std::cos(th), st = std::sin(th);
  Eigen::Matrix2d Rt;
  Rt << ct, -st, st, ct;
  r.z_r.head<2>() = Rz * (xR.head<2>() - z.head<2>()) + Rt * p_d;
  r.z_r(2) = th;
  return r;
}

/// Leader-frame nominal input used by the stage cost (kept verbatim from the
/// published transform).
inline Eigen::Vector2d relative_input(const Eigen::Vector2d& v, double z_r3,
                                      const UnicycleSynthesis& syn) {
  const double a = syn.nuR - syn.p_d.x() * syn.omegaR;
  Eigen::Vector2d vr;
  vr(0) = -v(0) + a * std::cos(z_r3) - syn.p_d.x() * syn.omegaR * std::sin(z_r3);
  vr(1) = -syn.rho * v(1) + a * std::sin(z_r3) - syn.p_d.y() * syn.omegaR * std::cos(z_r3);
  return vr;
}

/// Nonlinear ancillary law: exact position-error linearization, e' = -Ke e + w.
inline Eigen::Vector2d ancillary_unicycle(const Eigen::Vector3d& x, const Eigen::Vector3d& z,
                                          const Eigen::Vector2d& v, double Ke, double rho) {
  const Eigen::Vector2d e = x.head<2>() - z.head<2>();
  return heading_matrix(x(2), rho).inverse() * (heading_matrix(z(2), rho) * v - Ke * e);
}

/// Discrete nominal follower model (RK4 of the disturbance-free kinematics).
inline Eigen::Vector3d unicycle_nominal_step(const Eigen::Vector3d& z, const Eigen::Vector2d& v,
                                             double rho, double Ts) {
  Vector zf(3);
  zf = z;
  const auto f = [&](const Vector& s, const Vector& u, const Vector&) {
    return Vector(unicycle_derivative(s.head<3>(), u.head<2>(), {0, 0}, rho));
  };
  Vector vu(2);
  vu = v;
  Vector out = rk4_step(f, zf, vu, Vector::Zero(2), Ts);
  out(2) = wrap_angle(out(2));
  return out.head<3>();
}

// ---------------------------------------------------------------------------
// Heading-error disturbance bounds (interval arithmetic over the error box)

/// Bound of the lumped heading disturbance
///   w = -(sin e3 - e3) v1/rho + (cos e3 - 1) v2
///       - Ke/rho sin(z3+e3) e1 - Ke/rho cos(z3+e3) e2
/// over the error box; terms 3-4 are extremized over box corners plus the
/// interior critical angles of sin/cos.
inline Interval directional_bound(const UnicycleErrorBox& E, double z3, const Eigen::Vector2d& v,
                                  const UnicycleSynthesis& syn) {
  const double kr = syn.Ke / syn.rho;
  Interval total{0.0, 0.0};

  {  // term 1: (e3 - sin e3) v1 / rho, monotone in e3
    const auto g = [&](double e3) { return (e3 - std::sin(e3)) * v(0) / syn.rho; };
    const double a = g(E.e3.lo), b = g(E.e3.hi);
    total = total.plus({std::min(a, b), std::max(a, b)});
  }
  {  // term 2: (cos e3 - 1) v2 with cos(max|e3|) as the extreme value
    const double cm = std::cos(E.e3.max_abs()) - 1.0;
    total = total.plus({cm * std::max(v(1), 0.0), cm * std::min(v(1), 0.0)});
  }
  const auto extremize = [&](const Interval& e_pos, bool use_sin) {
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    std::vector<double> angles = {z3 + E.e3.lo, z3 + E.e3.hi};
    // interior critical points of sin/cos inside the angle range
    const double a_lo = z3 + E.e3.lo, a_hi = z3 + E.e3.hi;
    const double period_start = std::floor(a_lo / (0.5 * M_PI)) * 0.5 * M_PI;
    for (double a = period_start; a <= a_hi + 1e-12; a += 0.5 * M_PI)
      if (a >= a_lo - 1e-12) angles.push_back(a);
    for (double a : angles) {
      const double trig = use_sin ? std::sin(a) : std::cos(a);
      for (double e : {e_pos.lo, e_pos.hi}) {
        const double val = -kr * trig * e;
        mn = std::min(mn, val);
        mx = std::max(mx, val);
      }
    }
    return Interval{mn, mx};
  };
  total = total.plus(extremize(E.e1, true));    // term 3
  total = total.plus(extremize(E.e2, false));   // term 4
  return total;
}

/// One interval step of the box tube: positions contract by Ked and absorb
/// the +-Ts*eta disturbance; the heading channel uses the state-dependent
/// decay and the directional bound.
inline UnicycleErrorBox box_tube_step(const UnicycleErrorBox& E, double z3,
                                      const Eigen::Vector2d& v, const UnicycleSynthesis& syn,
                                      bool* heading_ok = nullptr) {
  UnicycleErrorBox out;
  const Interval wpos = Interval::symmetric(syn.Ts * syn.eta);
  out.e1 = E.e1.scaled(syn.Ked).plus(wpos);
  out.e2 = E.e2.scaled(syn.Ked).plus(wpos);
  const double kd = syn.Ktheta_d(v(0));
  const Interval w3 = directional_bound(E, z3, v, syn).scaled(syn.heading_w_scale(v(0)));
  out.e3 = E.e3.scaled(kd).plus(w3);
  if (heading_ok) *heading_ok = out.e3.max_abs() < M_PI / 4.0;
  return out;
}

/// Input-tightening scale from the heading error (even, 1 at zero, decreasing
/// in |e3| on (-pi/4, pi/4)).
inline double lambda_scale(double e3) { return 1.0 / (std::cos(e3) + std::abs(std::sin(e3))); }

/// Diamond input set {u : |u1|/nu_max + rho |u2|/nu_max <= 1} as four
/// normalized facets.
inline TemplatePolytope input_diamond(const UnicycleSynthesis& syn, double scale = 1.0) {
  Matrix n(4, 2);
  Vector b(4);
  int r = 0;
  for (double s1 : {1.0, -1.0})
    for (double s2 : {1.0, -1.0}) {
      Eigen::Vector2d nn(s1, s2 * syn.rho);
      const double nrm = nn.norm();
      n.row(r) = nn.transpose() / nrm;
      b(r) = scale * syn.nu_max / nrm;
      ++r;
    }
  return TemplatePolytope(n, b);
}

/// Online-tightened nominal input set
///   V(E) = min_{e3} lambda(e3) * U  (-)  M(z3) Ke (E1 x E2).
/// Empty results are flagged via the opposite-facet test.
inline TemplatePolytope tighten_inputs(const UnicycleErrorBox& E, double z3,
                                       const UnicycleSynthesis& syn, bool* empty = nullptr) {
  const double lmin = lambda_scale(E.e3.max_abs());
  TemplatePolytope V = input_diamond(syn, lmin);
  Eigen::Matrix2d M;
  M << -std::cos(z3), -std::sin(z3), std::sin(z3) / syn.rho, -std::cos(z3) / syn.rho;
  for (Eigen::Index j = 0; j < V.facets(); ++j) {
    const Eigen::Vector2d d = syn.Ke * (M.transpose() * V.normals.row(j).transpose());
    const double h = std::max(d(0) * E.e1.lo, d(0) * E.e1.hi) +
                     std::max(d(1) * E.e2.lo, d(1) * E.e2.hi);
    V.offsets(j) -= h;
  }
  if (empty) {
    // facet rows are ordered (+,+),(+,-),(-,+),(-,-): opposite pairs (0,3),(1,2)
    *empty = (V.offsets(0) + V.offsets(3) < 0.0) || (V.offsets(1) + V.offsets(2) < 0.0);
  }
  return V;
}

// ---------------------------------------------------------------------------
// Controllers

struct UnicycleStepResult {
  Eigen::Vector2d u = Eigen::Vector2d::Zero();     // realized input
  Eigen::Vector2d v0 = Eigen::Vector2d::Zero();    // first nominal input
  Eigen::Vector3d z0 = Eigen::Vector3d::Zero();    // chosen initial nominal state
  Matrix v_seq;                                    // 2 x N plan
  std::vector<UnicycleErrorBox> tube;              // SDD only
  SolveReport report;
};

struct UnicycleControllerState {
  Matrix warm;  // previous plan, 2 x N (empty before the first step)
  Eigen::Vector3d warm_z0 = Eigen::Vector3d::Zero();
};

namespace detail {

inline double unicycle_plan_cost(const UnicycleSynthesis& syn, const Eigen::Vector3d& z0,
                                 const Matrix& v_seq,
                                 const std::vector<Eigen::Vector3d>& leader,
                                 Eigen::Vector3d* zN_out = nullptr, double* term_resid = nullptr) {
  Eigen::Vector3d z = z0;
  double J = 0.0;
  const int N = static_cast<int>(v_seq.cols());
  for (int i = 0; i < N; ++i) {
    const auto zr = to_leader_frame(z, leader[i], syn.p_d);
    const auto vr = relative_input(v_seq.col(i), zr.z_r(2), syn);
    J += zr.z_r.head<2>().dot(syn.Q2 * zr.z_r.head<2>()) + vr.dot(syn.R2 * vr);
    z = unicycle_nominal_step(z, v_seq.col(i), syn.rho, syn.Ts);
  }
  const auto zrN = to_leader_frame(z, leader[N], syn.p_d);
  J += zrN.z_r.head<2>().dot(syn.F2 * zrN.z_r.head<2>());
  if (zN_out) *zN_out = z;
  if (term_resid)
    *term_resid = std::abs(zrN.z_r(0)) + std::abs(zrN.z_r(1)) - syn.zf_bound;
  return J;
}

inline Matrix unpack_plan(const Vector& x, int N) {
  Matrix v(2, N);
  for (int i = 0; i < N; ++i) v.col(i) = x.segment(3 + 2 * i, 2);
  return v;
}

}  // namespace detail

/// Baseline nonlinear tube MPC: swarm solve over (z0 offset, nominal inputs)
/// with the fixed input scaling v in 0.6636*U and the published terminal set.
inline UnicycleStepResult ntmpc_step(const UnicycleSynthesis& syn, const Eigen::Vector3d& x,
                                     const std::vector<Eigen::Vector3d>& leader,
                                     UnicycleControllerState& st, const SwarmConfig& swarm_base) {
  const int N = syn.N;
  const TemplatePolytope V = input_diamond(syn, syn.v_const);

  const auto z_from = [&](const Vector& d) {
    Eigen::Vector3d z0 = x;
    z0(0) += d(0);
    z0(1) += d(1);
    z0(2) = wrap_angle(z0(2) + d(2));
    return z0;
  };
  const auto objective = [&](const Vector& d) {
    return detail::unicycle_plan_cost(syn, z_from(d), detail::unpack_plan(d, N), leader);
  };
  const auto residuals = [&](const Vector& d) {
    const Matrix v = detail::unpack_plan(d, N);
    Vector r(4 * N + 1);
    int idx = 0;
    for (int i = 0; i < N; ++i)
      for (Eigen::Index j = 0; j < V.facets(); ++j)
        r(idx++) = V.normals.row(j).dot(v.col(i)) - V.offsets(j);
    double term = 0.0;
    detail::unicycle_plan_cost(syn, z_from(d), v, leader, nullptr, &term);
    r(idx++) = term;
    return r;
  };

  SwarmConfig cfg = swarm_base;
  Vector lo(3 + 2 * N), hi(3 + 2 * N);
  lo.head(3) << -syn.emax_bound, -syn.emax_bound, -M_PI / 4.0;
  hi.head(3) = -lo.head(3);
  for (int i = 0; i < N; ++i) {
    lo.segment(3 + 2 * i, 2) << -syn.nu_max, -syn.nu_max / syn.rho;
    hi.segment(3 + 2 * i, 2) << syn.nu_max, syn.nu_max / syn.rho;
  }
  cfg.bounds = Box(lo, hi);

  Vector warm = Vector::Zero(3 + 2 * N);
  if (st.warm.cols() == N) {
    warm.head(3) << st.warm_z0(0) - x(0), st.warm_z0(1) - x(1), wrap_angle(st.warm_z0(2) - x(2));
    for (int i = 0; i < N - 1; ++i) warm.segment(3 + 2 * i, 2) = st.warm.col(i + 1);
    warm.segment(3 + 2 * (N - 1), 2) = st.warm.col(N - 1);
  }

  UnicycleStepResult out;
  out.report = pso_minimize(objective, residuals, cfg, warm);
  out.z0 = z_from(out.report.solution);
  out.v_seq = detail::unpack_plan(out.report.solution, N);
  out.v0 = out.v_seq.col(0);
  out.u = ancillary_unicycle(x, out.z0, out.v0, syn.Ke, syn.rho);
  st.warm = out.v_seq;
  st.warm_z0 = unicycle_nominal_step(out.z0, out.v0, syn.rho, syn.Ts);
  return out;
}

/// SDD-TMPC for the follower: box tube propagated alongside the plan, inputs
/// constrained by the online-tightened set V(E_i), warm-started from the
/// baseline solution.
inline UnicycleStepResult sddtmpc_unicycle_step(const UnicycleSynthesis& syn,
                                                const Eigen::Vector3d& x,
                                                const std::vector<Eigen::Vector3d>& leader,
                                                UnicycleControllerState& st,
                                                const SwarmConfig& swarm_base,
                                                const Vector& warm_start) {
  const int N = syn.N;

  const auto z_from = [&](const Vector& d) {
    Eigen::Vector3d z0 = x;
    z0(0) += d(0);
    z0(1) += d(1);
    z0(2) = wrap_angle(z0(2) + d(2));
    return z0;
  };
  const auto objective = [&](const Vector& d) {
    return detail::unicycle_plan_cost(syn, z_from(d), detail::unpack_plan(d, N), leader);
  };
  const auto residuals = [&](const Vector& d) {
    const Matrix v = detail::unpack_plan(d, N);
    const Eigen::Vector3d z0 = z_from(d);
    Vector r(4 * N + N + 1);
    int idx = 0;
    UnicycleErrorBox E;
    E.e1 = Interval::point(-d(0));
    E.e2 = Interval::point(-d(1));
    E.e3 = Interval::point(wrap_angle(x(2) - z0(2)));
    Eigen::Vector3d z = z0;
    for (int i = 0; i < N; ++i) {
      bool empty = false;
      const auto V = tighten_inputs(E, z(2), syn, &empty);
      for (Eigen::Index j = 0; j < V.facets(); ++j)
        r(idx++) = V.normals.row(j).dot(v.col(i)) - V.offsets(j);
      bool heading_ok = true;
      E = box_tube_step(E, z(2), v.col(i), syn, &heading_ok);
      r(idx++) = heading_ok ? -1.0 : E.e3.max_abs() - M_PI / 4.0;
      z = unicycle_nominal_step(z, v.col(i), syn.rho, syn.Ts);
    }
    double term = 0.0;
    detail::unicycle_plan_cost(syn, z0, v, leader, nullptr, &term);
    r(idx++) = term;
    return r;
  };

  SwarmConfig cfg = swarm_base;
  Vector lo(3 + 2 * N), hi(3 + 2 * N);
  lo.head(3) << -syn.emax_bound, -syn.emax_bound, -M_PI / 4.0;
  hi.head(3) = -lo.head(3);
  for (int i = 0; i < N; ++i) {
    lo.segment(3 + 2 * i, 2) << -syn.nu_max, -syn.nu_max / syn.rho;
    hi.segment(3 + 2 * i, 2) << syn.nu_max, syn.nu_max / syn.rho;
  }
  cfg.bounds = Box(lo, hi);

  UnicycleStepResult out;
  out.report = pso_minimize(objective, residuals, cfg, warm_start);
  out.z0 = z_from(out.report.solution);
  out.v_seq = detail::unpack_plan(out.report.solution, N);
  out.v0 = out.v_seq.col(0);
  out.u = ancillary_unicycle(x, out.z0, out.v0, syn.Ke, syn.rho);

  // record the tube along the accepted plan
  UnicycleErrorBox E;
  E.e1 = Interval::point(x(0) - out.z0(0));
  E.e2 = Interval::point(x(1) - out.z0(1));
  E.e3 = Interval::point(wrap_angle(x(2) - out.z0(2)));
  out.tube.push_back(E);
  Eigen::Vector3d z = out.z0;
  for (int i = 0; i < N; ++i) {
    E = box_tube_step(E, z(2), out.v_seq.col(i), syn);
    out.tube.push_back(E);
    z = unicycle_nominal_step(z, out.v_seq.col(i), syn.rho, syn.Ts);
  }
  st.warm = out.v_seq;
  st.warm_z0 = unicycle_nominal_step(out.z0, out.v0, syn.rho, syn.Ts);
  return out;
}

}  // namespace sddtmpc
