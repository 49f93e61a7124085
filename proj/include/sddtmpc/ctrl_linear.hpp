#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

#include "sddtmpc/fis.hpp"
#include "sddtmpc/geometry.hpp"
#include "sddtmpc/pso.hpp"
#include "sddtmpc/qp.hpp"
#include "sddtmpc/synthesis.hpp"
#include "sddtmpc/world.hpp"

namespace sddtmpc {

// ---------------------------------------------------------------------------
// Case-study design: plant constants, gains, tube cross-section, terminal sets

struct HolonomicDesign {
  LinearSystem sys;
  Matrix Q, R;          // main stage weights
  Matrix F;             // terminal cost (published matrix)
  Matrix K;             // ancillary feedback u = K e
  Matrix kappa;         // terminal LQR law
  TemplatePolytope Emax;       // fixed tube cross-section
  TemplatePolytope X, U;       // base state/input constraints (boxes)
  TemplatePolytope Xt;         // X (-) Emax
  TemplatePolytope Ut;         // scaled nominal input set for TMPC
  TemplatePolytope Zf;         // terminal set (nominal constraints)
  TemplatePolytope Zf_tight;   // terminal set in tube-tightened constraints

  double vel_bound = 2.0;
  double acc_bound = 5.0;
  double pos_bound = 50.0;
  // Disc radius of the disturbance the fixed tube is designed for; reproduces
  // the published corridor feasibility frontier (p_x = 4.59).
  double tube_design_radius = 0.10356;
  // TMPC nominal input set = this fraction of U; reproduces the published
  // nominal-cost gap (the K-image of Emax would empty the set entirely).
  double input_tighten_frac = 0.52;

  SynthesisResult as_result() const {
    return SynthesisResult{K, kappa, F, Emax, Zf, Zf_tight};
  }
};

inline TemplatePolytope state_box(double pos_bound, double vel_bound) {
  return Box((Vector(4) << -pos_bound, -pos_bound, -vel_bound, -vel_bound).finished(),
             (Vector(4) << pos_bound, pos_bound, vel_bound, vel_bound).finished())
      .to_polytope();
}

inline HolonomicDesign make_holonomic_design() {
  HolonomicDesign d;
  d.sys = LinearSystem(holonomic_A(), holonomic_B(), kHolonomicTs);
  d.Q = Eigen::Vector4d(100, 100, 1, 1).asDiagonal();
  d.R = Matrix::Identity(2, 2);
  const Matrix QK = Eigen::Vector4d(100, 100, 0.1, 0.1).asDiagonal();
  const Matrix Qk = Eigen::Vector4d(10, 10, 1, 1).asDiagonal();
  d.K = dlqr(d.sys.A, d.sys.B, QK, Matrix::Identity(2, 2));
  d.kappa = dlqr(d.sys.A, d.sys.B, Qk, Matrix::Identity(2, 2));
  d.F = terminal_cost(d.sys.A, d.sys.B, d.kappa, d.Q, d.R, LyapOrientation::gramian);

  const Matrix Acl = d.sys.A + d.sys.B * d.K;
  const auto Wd = embed_position_disturbance(circumscribe_ellipse(
      Ellipse2(d.tube_design_radius, d.tube_design_radius, 0.0), 8));
  d.Emax = mrpi_approx(Acl, Wd, reach_closed_template(Acl, box_diag_template4()), 0.01);

  d.X = state_box(d.pos_bound, d.vel_bound);
  d.U = Box(Eigen::Vector2d(-d.acc_bound, -d.acc_bound),
            Eigen::Vector2d(d.acc_bound, d.acc_bound))
            .to_polytope();
  d.Xt = pontryagin_diff(d.X, d.Emax);
  d.Ut = d.U;
  d.Ut.offsets *= d.input_tighten_frac;

  const Matrix Aterm = d.sys.A + d.sys.B * d.kappa;
  d.Zf = max_positive_invariant(Aterm, d.X, d.U, d.kappa);
  d.Zf_tight = max_positive_invariant(Aterm, d.Xt, d.Ut, d.kappa);
  return d;
}

// ---------------------------------------------------------------------------
// Shared pieces

struct CostConfig {
  Matrix Q, R, F;
  bool terminal_cost = false;  // include ||z_N||_F^2
  bool terminal_set = false;   // include z_N in Zf
};

struct TubeSection {
  Eigen::Vector4d z;
  TemplatePolytope E;
};

struct LinearControllerState {
  Eigen::Vector4d z = Eigen::Vector4d::Zero();  // tracked nominal state
  Matrix warm;                                  // previous input plan (2 x N), may be empty
  int N = 5;
};

namespace detail {

/// Condensed-prediction matrices: x_i = Phi_i x0 + Gamma_i u_(0..N-1).
struct Prediction {
  std::vector<Matrix> Phi;    // N+1 entries, 4x4
  std::vector<Matrix> Gamma;  // N+1 entries, 4x(2N)
};

inline Prediction predict(const LinearSystem& sys, int N) {
  Prediction p;
  p.Phi.resize(N + 1);
  p.Gamma.resize(N + 1);
  p.Phi[0] = Matrix::Identity(4, 4);
  p.Gamma[0] = Matrix::Zero(4, 2 * N);
  for (int i = 1; i <= N; ++i) {
    p.Phi[i] = sys.A * p.Phi[i - 1];
    p.Gamma[i] = sys.A * p.Gamma[i - 1];
    p.Gamma[i].block(0, 2 * (i - 1), 4, 2) = sys.B;
  }
  return p;
}

/// Cost of a nominal rollout in the Table convention: stage terms for
/// i = 0..N-1 (including the fixed initial state) plus the optional terminal.
inline double rollout_cost(const LinearSystem& sys, const CostConfig& cost,
                           const Eigen::Vector4d& x0, const Eigen::Vector4d& ref,
                           const Matrix& useq) {
  Eigen::Vector4d z = x0;
  double J = 0.0;
  const int N = static_cast<int>(useq.cols());
  for (int i = 0; i < N; ++i) {
    const Eigen::Vector4d e = z - ref;
    J += e.dot(cost.Q * e) + useq.col(i).dot(cost.R * useq.col(i));
    z = sys.A * z + sys.B * useq.col(i);
  }
  if (cost.terminal_cost) {
    const Eigen::Vector4d e = z - ref;
    J += e.dot(cost.F * e);
  }
  return J;
}

}  // namespace detail

struct StepResult {
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  Matrix v_seq;  // 2 x N nominal plan actually applied/stored
  SolveReport report;
  bool used_fallback = false;
};

// ---------------------------------------------------------------------------
// MPC (nominal QP on the measured state)

/// One MPC solve from state x toward ref; constraints X (state), U (input),
/// optional terminal set. Reported objective uses the rollout convention.
inline StepResult mpc_step(const LinearSystem& sys, const Eigen::Vector4d& x,
                           const Eigen::Vector4d& ref, const CostConfig& cost, int N,
                           const TemplatePolytope& X, const TemplatePolytope& U,
                           const TemplatePolytope* Zf = nullptr) {
  const auto pred = detail::predict(sys, N);
  const int nu = 2 * N;
  Matrix H = Matrix::Zero(nu, nu);
  Vector f = Vector::Zero(nu);
  for (int i = 1; i <= N; ++i) {
    const bool last = (i == N);
    Matrix W = last ? (cost.terminal_cost ? cost.F : Matrix::Zero(4, 4)) : cost.Q;
    if (W.cwiseAbs().maxCoeff() == 0.0) continue;
    H += 2.0 * pred.Gamma[i].transpose() * W * pred.Gamma[i];
    f += 2.0 * pred.Gamma[i].transpose() * W * (pred.Phi[i] * x - ref);
  }
  for (int i = 0; i < N; ++i) H.block(2 * i, 2 * i, 2, 2) += 2.0 * cost.R;

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  const auto add_state_rows = [&](int i, const TemplatePolytope& S) {
    for (Eigen::Index j = 0; j < S.facets(); ++j) {
      rows.emplace_back(S.normals.row(j) * pred.Gamma[i]);
      rhs.push_back(S.offsets(j) - S.normals.row(j).dot(pred.Phi[i] * x));
    }
  };
  for (int i = 1; i <= N; ++i) add_state_rows(i, X);
  if (cost.terminal_set && Zf) add_state_rows(N, *Zf);
  for (int i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < U.facets(); ++j) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(nu);
      r.segment(2 * i, 2) = U.normals.row(j);
      rows.emplace_back(r);
      rhs.push_back(U.offsets(j));
    }
  }
  QpProblem qp;
  qp.H = 0.5 * (H + H.transpose());
  qp.f = f;
  qp.A_in.resize(rows.size(), nu);
  qp.b_in.resize(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    qp.A_in.row(r) = rows[r];
    qp.b_in(r) = rhs[r];
  }
  qp.A_eq.resize(0, nu);
  qp.b_eq.resize(0);

  StepResult out;
  out.report = QpSolver().solve(qp);
  out.v_seq = Matrix::Zero(2, N);
  if (out.report.feasible) {
    for (int i = 0; i < N; ++i) out.v_seq.col(i) = out.report.solution.segment(2 * i, 2);
    out.u = out.v_seq.col(0);
    out.report.objective = detail::rollout_cost(sys, cost, x, ref, out.v_seq);
  }
  return out;
}

// ---------------------------------------------------------------------------
// TMPC (nominal QP on the tracked nominal state, tightened sets)

/// One TMPC step. The nominal z is controller state: the QP plans from z with
/// tightened sets, the realized input is u = K(x - z) + v0, and z advances by
/// the nominal model. On infeasibility the previous plan is shifted and
/// extended with the terminal law (flagged).
inline StepResult tmpc_step(const HolonomicDesign& d, const Eigen::Vector4d& x,
                            LinearControllerState& st, const Eigen::Vector4d& ref,
                            const CostConfig& cost, const TemplatePolytope& Xt,
                            const TemplatePolytope& Ut, const TemplatePolytope* Zf_t = nullptr) {
  StepResult out = mpc_step(d.sys, st.z, ref, cost, st.N, Xt, Ut, Zf_t);
  if (!out.report.feasible) {
    out.used_fallback = true;
    Matrix vs = Matrix::Zero(2, st.N);
    if (st.warm.cols() == st.N) {
      vs.leftCols(st.N - 1) = st.warm.rightCols(st.N - 1);
      Eigen::Vector4d zN = st.z;
      for (int i = 0; i < st.N - 1; ++i) zN = d.sys.A * zN + d.sys.B * vs.col(i);
      vs.col(st.N - 1) = d.kappa * zN;
    }
    out.v_seq = vs;
  }
  out.u = d.K * (x - st.z) + out.v_seq.col(0);
  st.warm = out.v_seq;
  st.z = d.sys.A * st.z + d.sys.B * out.v_seq.col(0);
  return out;
}

// ---------------------------------------------------------------------------
// SDD-TMPC (swarm solve over the nominal inputs with a state-dependent tube)

/// Everything a disturbance model may condition on for one tube section: the
/// nominal center plus the section's own extents, so the returned set can
/// cover every state the section contains (worst-case speed and slip).
struct SectionInfo {
  Eigen::Vector4d z = Eigen::Vector4d::Zero();
  double vel_extent = 0.0;   // euclidean bound on the velocity error
  double pos_extent_x = 0.0;
  double pos_extent_y = 0.0;
};

/// Learned (or oracle) disturbance-set source for tube propagation.
using DisturbanceModel = std::function<SupportSet2(const SectionInfo&)>;

/// Planar vertex set of a learned disturbance polytope for fast supports.
inline SupportSet2 planar_support_set(const TemplatePolytope& W2) {
  return SupportSet2(enumerate_vertices_2d(W2));
}

namespace detail {
/// Section state with the velocity magnitude inflated to the worst case the
/// section can contain (heading kept from the nominal velocity).
inline Eigen::Vector4d worst_speed_state(const SectionInfo& info) {
  Eigen::Vector4d x = info.z;
  const double v = std::hypot(x(2), x(3));
  const double vhat = v + info.vel_extent;
  if (v > 1e-9) {
    x(2) *= vhat / v;
    x(3) *= vhat / v;
  } else {
    x(2) = vhat;
    x(3) = 0.0;
  }
  return x;
}
}  // namespace detail

/// FIS-backed disturbance model at the given intensity; evaluated at the
/// section's worst-case speed and slip so the set covers the whole section.
inline DisturbanceModel fis_disturbance_model(const FisModel& major, const FisModel& minor,
                                              BetaField beta, double intensity) {
  const TemplatePolytope cap = wmax_octagon(intensity);
  return [&major, &minor, beta, intensity, cap](const SectionInfo& info) {
    const Eigen::Vector4d xh = detail::worst_speed_state(info);
    HolonomicState s;
    s.x = info.z;
    const double b = std::max(1e-6, beta.max_over(s, info.pos_extent_x, info.pos_extent_y));
    return planar_support_set(disturbance_set(major, minor, xh, b, cap, intensity));
  };
}

/// Ground-truth-backed model (the oracle the FIS approximates), capped the
/// same way.
inline DisturbanceModel oracle_disturbance_model(BetaField beta, double intensity) {
  const TemplatePolytope cap = wmax_octagon(intensity);
  return [beta, intensity, cap](const SectionInfo& info) {
    const Eigen::Vector4d xh = detail::worst_speed_state(info);
    HolonomicState sh;
    sh.x = xh;
    HolonomicState s;
    s.x = info.z;
    const double b = std::max(1e-6, beta.max_over(s, info.pos_extent_x, info.pos_extent_y));
    const Ellipse2 e = true_disturbance_set(sh, b, intensity);
    return planar_support_set(intersect(circumscribe_ellipse(e, 8), cap));
  };
}

namespace detail {

/// Tube supports via the exact Minkowski recursion
///   E_i = A_cl^i {+-e0} (+) sum_j A_cl^j emb(W_{i-1-j}),
/// so h_{E_i}(d) = |d.A_cl^i e0| + sum_j h_{W_(i-1-j)}(((A_cl^j)'d)_pos).
/// The initial-error term is kept as the symmetric hull {+-A^i e0}: a sound
/// superset of the translated section that stops the optimizer from spending
/// the known ancillary thrust as one-sided constraint slack.
struct TubeSupports {
  std::vector<Eigen::Matrix4d> Apow;  // A_cl^0 .. A_cl^N
  std::vector<SupportSet2> W;         // W_0 .. W_(N-1)
  Eigen::Vector4d e0;

  double support(int i, const Eigen::Vector4d& d) const {
    double h = std::abs(d.dot(Apow[i] * e0));
    for (int j = 0; j < i; ++j)
      h += W[i - 1 - j].support((Apow[j].transpose() * d).head<2>());
    return h;
  }
};

inline TubeSupports propagate_tube(const Matrix& Acl, const Eigen::Vector4d& e0,
                                   const std::vector<Eigen::Vector4d>& z_seq,
                                   const DisturbanceModel& model) {
  if (z_seq.empty()) throw std::invalid_argument("propagate_tube: empty nominal sequence");
  TubeSupports t;
  const int N = static_cast<int>(z_seq.size()) - 1;
  t.e0 = e0;
  t.Apow.resize(N + 1);
  t.Apow[0].setIdentity();
  for (int i = 1; i <= N; ++i) t.Apow[i] = Acl * t.Apow[i - 1];
  t.W.reserve(N);
  // sections are built in order so each disturbance set can be conditioned on
  // the extents of the section it acts on
  for (int i = 0; i < N; ++i) {
    SectionInfo info;
    info.z = z_seq[i];
    const auto ext = [&](int axis) {
      Eigen::Vector4d dp = Eigen::Vector4d::Zero(), dm = Eigen::Vector4d::Zero();
      dp(axis) = 1.0;
      dm(axis) = -1.0;
      return std::max(t.support(i, dp), t.support(i, dm));
    };
    info.pos_extent_x = ext(0);
    info.pos_extent_y = ext(1);
    info.vel_extent = std::hypot(ext(2), ext(3));
    t.W.push_back(model(info));
  }
  return t;
}

}  // namespace detail

/// Tube of (nominal state, error set) pairs for a given nominal plan, reported
/// on the fixed 16-facet template (offsets are the exact recursion supports).
inline std::vector<TubeSection> sddtmpc_tube_propagate(const HolonomicDesign& d,
                                                       const std::vector<Eigen::Vector4d>& z_seq,
                                                       const Eigen::Vector4d& e0,
                                                       const DisturbanceModel& model) {
  const Matrix Acl = d.sys.A + d.sys.B * d.K;
  const auto tube = detail::propagate_tube(Acl, e0, z_seq, model);
  const Matrix tmpl = box_diag_template4();
  std::vector<TubeSection> out;
  for (size_t i = 0; i < z_seq.size(); ++i) {
    Vector off(tmpl.rows());
    for (Eigen::Index j = 0; j < tmpl.rows(); ++j)
      off(j) = tube.support(static_cast<int>(i), tmpl.row(j).transpose());
    out.push_back({z_seq[i], TemplatePolytope(tmpl, off)});
  }
  return out;
}

struct SddStepOptions {
  SwarmConfig swarm;
  bool warm_start_tmpc = true;
};

/// One SDD-TMPC step: PSO over the nominal input sequence, tube residuals as
/// penalties, warm-started from the TMPC solution on (Xt, Ut) or, failing
/// that, from the shifted previous plan.
inline StepResult sddtmpc_step(const HolonomicDesign& d, const Eigen::Vector4d& x,
                               LinearControllerState& st, const Eigen::Vector4d& ref,
                               const CostConfig& cost, const TemplatePolytope& X,
                               const TemplatePolytope& U, const TemplatePolytope& Xt,
                               const TemplatePolytope& Ut, const DisturbanceModel& model,
                               const SddStepOptions& opt,
                               std::vector<double>* best_trace = nullptr) {
  const int N = st.N;
  const Matrix Acl = d.sys.A + d.sys.B * d.K;
  const Eigen::Vector4d e0 = x - st.z;

  // warm starts: the TMPC solve when feasible, plus the shifted previous plan
  Matrix warm = Matrix::Zero(2, N);
  Matrix shifted = Matrix::Zero(2, N);
  bool have_shifted = false;
  if (st.warm.cols() == N) {
    have_shifted = true;
    shifted.leftCols(N - 1) = st.warm.rightCols(N - 1);
    Eigen::Vector4d zN = st.z;
    for (int i = 0; i < N - 1; ++i) zN = d.sys.A * zN + d.sys.B * shifted.col(i);
    shifted.col(N - 1) = d.kappa * zN;
  }
  {
    const auto t = opt.warm_start_tmpc
                       ? mpc_step(d.sys, st.z, ref, cost, N, Xt, Ut,
                                  cost.terminal_set ? &d.Zf_tight : nullptr)
                       : StepResult{};
    if (t.report.feasible) {
      warm = t.v_seq;
    } else if (have_shifted) {
      warm = shifted;
    }
  }

  const auto roll = [&](const Vector& v) {
    std::vector<Eigen::Vector4d> z(N + 1);
    z[0] = st.z;
    for (int i = 0; i < N; ++i) z[i + 1] = d.sys.A * z[i] + d.sys.B * v.segment(2 * i, 2);
    return z;
  };

  const auto objective = [&](const Vector& v) {
    const auto z = roll(v);
    double J = 0.0;
    for (int i = 0; i < N; ++i) {
      const Eigen::Vector4d e = z[i] - ref;
      J += e.dot(cost.Q * e) + v.segment(2 * i, 2).dot(cost.R * v.segment(2 * i, 2));
    }
    if (cost.terminal_cost) {
      const Eigen::Vector4d e = z[N] - ref;
      J += e.dot(cost.F * e);
    }
    return J;
  };

  const int n_x_rows = static_cast<int>(X.facets());
  const int n_u_rows = static_cast<int>(U.facets());
  const int n_zf_rows = cost.terminal_set ? static_cast<int>(d.Zf_tight.facets()) : 0;
  const auto residuals = [&](const Vector& v) {
    const auto z = roll(v);
    const auto tube = detail::propagate_tube(Acl, e0, z, model);
    Vector r(N * n_x_rows + N * n_u_rows + n_zf_rows);
    int idx = 0;
    for (int i = 1; i <= N; ++i) {
      for (Eigen::Index j = 0; j < X.facets(); ++j) {
        const Eigen::Vector4d a = X.normals.row(j).transpose();
        r(idx++) = a.dot(z[i]) + tube.support(i, a) - X.offsets(j);
      }
    }
    for (int i = 0; i < N; ++i) {
      for (Eigen::Index j = 0; j < U.facets(); ++j) {
        const Eigen::Vector2d m = U.normals.row(j).transpose();
        const Eigen::Vector4d km = d.K.transpose() * m;
        r(idx++) = m.dot(v.segment(2 * i, 2)) + tube.support(i, km) - U.offsets(j);
      }
    }
    for (Eigen::Index j = 0; j < n_zf_rows; ++j) {
      r(idx++) = d.Zf_tight.normals.row(j).dot(z[N]) - d.Zf_tight.offsets(j);
    }
    return r;
  };

  SwarmConfig swarm = opt.swarm;
  swarm.bounds = Box(Vector::Constant(2 * N, -d.acc_bound), Vector::Constant(2 * N, d.acc_bound));
  Vector warm_flat(2 * N);
  for (int i = 0; i < N; ++i) warm_flat.segment(2 * i, 2) = warm.col(i);
  std::vector<Vector> seeds;
  if (have_shifted) {
    Vector sf(2 * N);
    for (int i = 0; i < N; ++i) sf.segment(2 * i, 2) = shifted.col(i);
    seeds.push_back(sf);
  }
  // sequential-convexification solve: freeze the tube along a given plan and
  // solve the induced QP exactly; the swarm then only has to correct for the
  // tube's dependence on the plan itself
  const auto convexified = [&](const Vector& plan) -> std::optional<Vector> {
    const auto zw = roll(plan);
    const auto tube = detail::propagate_tube(Acl, e0, zw, model);
    const auto pred = detail::predict(d.sys, N);
    Matrix H = Matrix::Zero(2 * N, 2 * N);
    Vector f = Vector::Zero(2 * N);
    for (int i = 1; i <= N; ++i) {
      const bool last = (i == N);
      Matrix Wq = last ? (cost.terminal_cost ? cost.F : Matrix::Zero(4, 4)) : cost.Q;
      if (Wq.cwiseAbs().maxCoeff() == 0.0) continue;
      H += 2.0 * pred.Gamma[i].transpose() * Wq * pred.Gamma[i];
      f += 2.0 * pred.Gamma[i].transpose() * Wq * (pred.Phi[i] * st.z - ref);
    }
    for (int i = 0; i < N; ++i) H.block(2 * i, 2 * i, 2, 2) += 2.0 * cost.R;
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> rhs;
    for (int i = 1; i <= N; ++i) {
      for (Eigen::Index j = 0; j < X.facets(); ++j) {
        const Eigen::Vector4d a = X.normals.row(j).transpose();
        rows.emplace_back(X.normals.row(j) * pred.Gamma[i]);
        rhs.push_back(X.offsets(j) - a.dot(pred.Phi[i] * st.z) - tube.support(i, a));
      }
    }
    for (int i = 0; i < N; ++i) {
      for (Eigen::Index j = 0; j < U.facets(); ++j) {
        Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(2 * N);
        r.segment(2 * i, 2) = U.normals.row(j);
        rows.emplace_back(r);
        const Eigen::Vector4d km = d.K.transpose() * U.normals.row(j).transpose();
        rhs.push_back(U.offsets(j) - tube.support(i, km));
      }
    }
    if (cost.terminal_set) {
      for (Eigen::Index j = 0; j < d.Zf_tight.facets(); ++j) {
        rows.emplace_back(d.Zf_tight.normals.row(j) * pred.Gamma[N]);
        rhs.push_back(d.Zf_tight.offsets(j) -
                      d.Zf_tight.normals.row(j).dot(pred.Phi[N] * st.z));
      }
    }
    QpProblem qp;
    qp.H = 0.5 * (H + H.transpose());
    qp.f = f;
    qp.A_in.resize(rows.size(), 2 * N);
    qp.b_in.resize(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
      qp.A_in.row(r) = rows[r];
      qp.b_in(r) = rhs[r];
    }
    qp.A_eq.resize(0, 2 * N);
    qp.b_eq.resize(0);
    const auto sol = QpSolver().solve(qp);
    if (sol.feasible) return sol.solution;
    return std::nullopt;
  };
  {
    Vector plan = warm_flat;
    for (int pass = 0; pass < 2; ++pass) {
      const auto next = convexified(plan);
      if (!next) break;
      plan = *next;
      seeds.push_back(plan);
    }
  }

  const auto max_residual = [&](const Vector& v) {
    const Vector r = residuals(v);
    return r.size() ? r.maxCoeff() : 0.0;
  };

  StepResult out;
  out.report =
      pso_minimize(objective, residuals, swarm, warm_flat, best_trace, seeds.empty() ? nullptr : &seeds);
  // one polishing pass at the swarm's answer, kept only when it beats it
  if (const auto polished = convexified(out.report.solution)) {
    const double pv = max_residual(*polished);
    const double pobj = objective(*polished);
    const bool pfeas = pv <= 1e-6;
    if ((pfeas && !out.report.feasible) ||
        (pfeas == out.report.feasible && pobj < out.report.objective)) {
      out.report.solution = *polished;
      out.report.objective = pobj;
      out.report.constraint_violation = pv;
      out.report.feasible = pfeas;
    }
  }
  out.v_seq = Matrix::Zero(2, N);
  for (int i = 0; i < N; ++i) out.v_seq.col(i) = out.report.solution.segment(2 * i, 2);
  if (!out.report.feasible) {
    // keep robustness: fall back to the shifted plan (feasible by construction
    // when the previous step was)
    out.used_fallback = true;
    out.v_seq = warm;
  }
  out.u = d.K * e0 + out.v_seq.col(0);
  st.warm = out.v_seq;
  st.z = d.sys.A * st.z + d.sys.B * out.v_seq.col(0);
  return out;
}

}  // namespace sddtmpc
