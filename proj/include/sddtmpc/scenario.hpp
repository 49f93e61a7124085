#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sddtmpc/ctrl_linear.hpp"
#include "sddtmpc/ctrl_unicycle.hpp"
#include "sddtmpc/fis.hpp"
#include "sddtmpc/world.hpp"

namespace sddtmpc {

enum class ControllerKind { mpc, tmpc, sddtmpc };

inline const char* to_string(ControllerKind c) {
  switch (c) {
    case ControllerKind::mpc: return "mpc";
    case ControllerKind::tmpc: return "tmpc";
    case ControllerKind::sddtmpc: return "sddtmpc";
  }
  return "?";
}

/// Scenario-level disturbance intensity: the factor applied to the ground-truth
/// ellipse (and, consistently, to the controller's learned sets) in closed-loop
/// runs. Calibrated against the published mission-time spreads.
inline constexpr double kScenarioIntensity = 0.125;

struct ScenarioConfig {
  std::string id = "s1";          // s1|s2|s3|s4|unicycle
  ControllerKind controller = ControllerKind::sddtmpc;
  std::string disturbance_case = "none";  // per-scenario case name
  int horizon = 5;                // s3 forces 6
  bool use_terminal = false;
  std::uint64_t seed = 0;
  int max_steps = 400;
  int pso_iterations = 60;
  double intensity = kScenarioIntensity;
  double s1_path_scale = 0.85;    // scenario-1 loop size factor
  bool oracle_model = false;      // ground-truth sets instead of the trained FIS
};

struct TrajectoryRow {
  int k = 0;
  double t = 0.0;
  Eigen::Vector4d x = Eigen::Vector4d::Zero();
  Eigen::Vector4d z = Eigen::Vector4d::Zero();
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  Eigen::Vector2d w = Eigen::Vector2d::Zero();
  double beta = 1.0;
  double cost = 0.0;
  bool feasible = true;
};

struct TrajectoryLog {
  std::vector<TrajectoryRow> rows;
  std::vector<std::string> events;  // "waypoint_reached k", "crash k", "infeasible k"
};

struct RunSummary {
  double mission_time = std::numeric_limits<double>::quiet_NaN();  // [s]
  double total_realized_cost = 0.0;
  double total_nominal_cost = 0.0;  // accumulated stage cost of the nominal plan
  double decision_cost = std::numeric_limits<double>::quiet_NaN();  // branch comparison value
  double min_wall_distance = std::numeric_limits<double>::quiet_NaN();
  double farthest_px = -std::numeric_limits<double>::infinity();
  bool crashed = false;
  bool infeasible_at_start = false;
  int infeasible_steps = 0;
  double final_error = std::numeric_limits<double>::quiet_NaN();
};

// ---------------------------------------------------------------------------
// Linear scenarios

/// Reference path of scenario 1: a 45-degree-rotated rectangular loop
/// (~17 m total) so both velocity axes engage on every leg, sampled densely
/// enough that the 0.3 m hand-over happens at cruise speed (carrot following,
/// no stop-and-go at the loop corners).
inline std::vector<Eigen::Vector2d> scenario1_waypoints(double scale = 1.0,
                                                        int per_leg = 5) {
  const std::vector<Eigen::Vector2d> corners = {
      {0.0, 0.0}, {3.0, 3.0}, {6.0, 0.0}, {3.0, -3.0}, {0.0, 0.0}};
  std::vector<Eigen::Vector2d> wp;
  for (size_t c = 0; c + 1 < corners.size(); ++c)
    for (int i = 1; i <= per_leg; ++i)
      wp.push_back(scale * (corners[c] + (corners[c + 1] - corners[c]) *
                                             (static_cast<double>(i) / per_leg)));
  return wp;
}

/// Scenario-4 obstacle: a thin triangular blocker on the start-target axis.
/// All branch geometry (gates, decision waypoints, slip boundary) is mirror
/// symmetric about that axis, so a slip-blind evaluation of the two branches
/// is identical by construction and any gap a controller reports is the
/// slip-zone effect alone.
struct Scenario4Geometry {
  Eigen::Vector2d start{2.3, 3.0};
  Eigen::Vector2d target{3.25, 3.05};
  double apex_half_height = 0.125;
  double waypoint_clearance = 0.7;   // perpendicular offset of the decision waypoints

  Eigen::Vector2d axis_dir() const { return (target - start).normalized(); }
  Eigen::Vector2d axis_normal() const {
    const Eigen::Vector2d e = axis_dir();
    return {-e.y(), e.x()};
  }
  Eigen::Vector2d axis_point(double t) const { return start + t * (target - start); }
  Eigen::Vector2d vertex_left() const { return axis_point(0.16); }
  Eigen::Vector2d vertex_right() const { return axis_point(0.84); }
  Eigen::Vector2d apex(bool up) const {
    return axis_point(0.5) + (up ? 1.0 : -1.0) * apex_half_height * axis_normal();
  }
  Eigen::Vector2d mid_waypoint(bool up) const {
    return axis_point(0.5) + (up ? 1.0 : -1.0) * waypoint_clearance * axis_normal();
  }
  double apex_progress(const Eigen::Vector2d& p) const {
    return axis_dir().dot(p - axis_point(0.5));
  }

  // half-plane n.p <= b keeping the axis-"up" side of the line through a, c
  struct Gate {
    Eigen::Vector2d n;
    double b;
  };
  Gate keep_side(const Eigen::Vector2d& a, const Eigen::Vector2d& c, bool up) const {
    Eigen::Vector2d n(c.y() - a.y(), -(c.x() - a.x()));
    n.normalize();
    if ((n.dot(axis_normal()) > 0) == up) n = -n;  // constraint excludes the far side
    return {n, n.dot(a)};
  }
  Gate approach(bool up) const { return keep_side(vertex_left(), apex(up), up); }
  Gate departure(bool up) const { return keep_side(apex(up), vertex_right(), up); }
};

/// Trained (or oracle) disturbance models shared by a batch of runs.
struct ScenarioModels {
  FisModel major, minor;
  bool trained = false;

  static ScenarioModels train(std::uint64_t seed = 20240811) {
    ScenarioModels m;
    const auto ds = gen_dataset(1240, 0, seed);
    GaConfig cfg;
    cfg.seed = seed;
    m.major = train_ga(ds, 0, cfg);
    m.minor = train_ga(ds, 1, cfg);
    m.trained = true;
    return m;
  }
};

namespace detail {

struct ScenarioSetup {
  TemplatePolytope X, Xt;            // with scenario facets
  std::vector<Eigen::Vector4d> hard_rows_n;  // hard position facets (crash check)
  std::vector<double> hard_rows_b;
  BetaField beta = BetaField::constant();
  Eigen::Vector4d x0 = Eigen::Vector4d::Zero();
  std::vector<Eigen::Vector2d> waypoints;
  double waypoint_radius = 0.3;
  DisturbanceMode mode;
  bool goal_is_px = false;
  double goal_px = 0.0;
};

inline void add_position_facet(ScenarioSetup& s, const Eigen::Vector2d& n2, double b) {
  Eigen::Vector4d n;
  n << n2(0), n2(1), 0, 0;
  const double nn = n.norm();
  s.hard_rows_n.push_back(n / nn);
  s.hard_rows_b.push_back(b / nn);
}

inline TemplatePolytope with_rows(const TemplatePolytope& base,
                                  const std::vector<Eigen::Vector4d>& ns,
                                  const std::vector<double>& bs) {
  Matrix n(base.facets() + static_cast<Eigen::Index>(ns.size()), 4);
  Vector b(n.rows());
  n.topRows(base.facets()) = base.normals;
  b.head(base.facets()) = base.offsets;
  for (size_t i = 0; i < ns.size(); ++i) {
    n.row(base.facets() + static_cast<Eigen::Index>(i)) = ns[i].transpose();
    b(base.facets() + static_cast<Eigen::Index>(i)) = bs[i];
  }
  return TemplatePolytope(n, b);
}

}  // namespace detail

/// Farthest start position [p_x, 0, 0, 0] for which the baseline tube
/// controller is feasible in the scenario-3 corridor (binary search on the
/// tightened QP).
inline double tmpc_feasibility_frontier(const HolonomicDesign& d, int horizon = 6) {
  detail::ScenarioSetup s;
  s.X = d.X;
  detail::add_position_facet(s, {1.0, 8.0}, 10.0);
  detail::add_position_facet(s, {1.0, -8.0}, 10.0);
  const auto X = detail::with_rows(d.X, s.hard_rows_n, s.hard_rows_b);
  const auto Xt = pontryagin_diff(X, d.Emax);
  const CostConfig cost{d.Q, d.R, d.F, false, false};
  const auto feasible_at = [&](double px) {
    Eigen::Vector4d x(px, 0, 0, 0);
    const Eigen::Vector4d ref(11, 0, 0, 0);
    const auto out = mpc_step(d.sys, x, ref, cost, horizon, Xt, d.Ut);
    return out.report.feasible;
  };
  double lo = 0.0, hi = 10.0;
  if (!feasible_at(lo)) return lo;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible_at(mid) ? lo : hi) = mid;
  }
  return lo;
}

namespace detail {

inline ScenarioSetup make_setup(const HolonomicDesign& d, const ScenarioConfig& cfg,
                                bool s4_up_branch) {
  ScenarioSetup s;
  if (cfg.id == "s1") {
    s.waypoints = scenario1_waypoints(cfg.s1_path_scale);
    s.x0.setZero();
    s.beta = BetaField::constant();
    if (cfg.disturbance_case == "attract")
      s.mode = DisturbanceMode::attract(Eigen::Vector2d::Zero());  // retargeted per step
    else if (cfg.disturbance_case == "repel")
      s.mode = DisturbanceMode::repel(Eigen::Vector2d::Zero());
    else
      s.mode = DisturbanceMode::none();
  } else if (cfg.id == "s2") {
    s.x0 << 2.0, 0.01, 0, 0;
    s.waypoints = {{8.5, 0.01}};
    s.beta = BetaField::corridor();
    add_position_facet(s, {0.0, -1.0}, 0.0);  // wall: p_y >= 0
    s.goal_is_px = true;
    s.goal_px = 8.5;
    if (cfg.disturbance_case == "push_up")
      s.mode = DisturbanceMode::push_up();
    else if (cfg.disturbance_case == "push_down")
      s.mode = DisturbanceMode::push_down();
    else
      s.mode = DisturbanceMode::none();
  } else if (cfg.id == "s3") {
    s.x0 << 5.5, 0, 0, 0;
    s.waypoints = {{11.0, 0.0}};
    s.beta = BetaField::constant();
    add_position_facet(s, {1.0, 8.0}, 10.0);
    add_position_facet(s, {1.0, -8.0}, 10.0);
    s.mode = cfg.disturbance_case == "push_up" ? DisturbanceMode::push_up()
                                               : DisturbanceMode::none();
  } else if (cfg.id == "s4") {
    const Scenario4Geometry g;
    s.x0 << g.start(0), g.start(1), 1.0, (s4_up_branch ? 1.2 : -1.2);
    s.waypoints = {g.mid_waypoint(s4_up_branch), g.target};
    const Eigen::Vector2d bn = g.axis_normal();
    s.beta = BetaField::two_zone_line(bn, bn.dot(g.axis_point(0.5)), 0.4);
    s.waypoint_radius = 0.45;
    const auto gate = g.approach(s4_up_branch);
    add_position_facet(s, gate.n, gate.b);
    s.mode = cfg.disturbance_case == "none" ? DisturbanceMode::none()
                                            : DisturbanceMode::uniform_random();
  } else {
    throw std::invalid_argument("unknown scenario id: " + cfg.id);
  }
  s.X = with_rows(d.X, s.hard_rows_n, s.hard_rows_b);
  if (cfg.id == "s4") {
    // neither the fixed tube nor even its velocity tightening can contain the
    // prescribed launch speeds next to the routing gate; the baseline keeps
    // its input tightening only here
    s.Xt = s.X;
  } else {
    s.Xt = pontryagin_diff(s.X, d.Emax);
  }
  return s;
}

}  // namespace detail

struct ScenarioResult {
  TrajectoryLog log;
  RunSummary summary;
};

/// Closed-loop run of one linear scenario under one controller.
/// For scenario 4 `s4_up_branch` selects the enumerated initial vertical
/// speed; callers evaluate both branches and compare decision costs.
inline ScenarioResult run_scenario(const HolonomicDesign& d, const ScenarioModels& models,
                                   const ScenarioConfig& cfg, bool s4_up_branch = true) {
  ScenarioResult res;
  auto setup = detail::make_setup(d, cfg, s4_up_branch);
  const Scenario4Geometry geom;
  const int N = (cfg.id == "s3") ? 6 : cfg.horizon;
  const CostConfig cost{d.Q, d.R, d.F, cfg.use_terminal, cfg.use_terminal};

  const DisturbanceModel model =
      (cfg.oracle_model || !models.trained)
          ? oracle_disturbance_model(setup.beta, cfg.intensity)
          : fis_disturbance_model(models.major, models.minor, setup.beta, cfg.intensity);

  std::mt19937_64 rng(cfg.seed * 2654435761ull + 12345ull);

  HolonomicState world;
  world.x = setup.x0;
  LinearControllerState st;
  st.N = N;
  st.z = setup.x0;
  if (cfg.id == "s2" && cfg.controller == ControllerKind::tmpc) {
    // nominal start away from the wall, as in the published runs: the initial
    // tube must not collide even though the robot itself starts at the wall
    st.z(1) = support(d.Emax, (Vector(4) << 0, 1, 0, 0).finished()) + 0.02;
  }

  SddStepOptions sdd_opt;
  sdd_opt.swarm.iterations = cfg.pso_iterations;
  sdd_opt.swarm.seed = cfg.seed + 17;

  size_t wp_index = 0;
  bool s4_departed = false;
  auto X = setup.X;
  auto Xt = setup.Xt;
  res.summary.min_wall_distance = std::numeric_limits<double>::infinity();

  for (int k = 0; k < cfg.max_steps; ++k) {
    // s4: swap the approach gate for the departure gate past the apex
    if (cfg.id == "s4" && !s4_departed && geom.apex_progress(world.x.head<2>()) >= 0.0) {
      s4_departed = true;
      setup.hard_rows_n.clear();
      setup.hard_rows_b.clear();
      const auto gate = geom.departure(s4_up_branch);
      detail::add_position_facet(setup, gate.n, gate.b);
      X = detail::with_rows(d.X, setup.hard_rows_n, setup.hard_rows_b);
      Xt = pontryagin_diff(X, d.Emax);
      wp_index = std::max<size_t>(wp_index, 1);
    }

    // waypoint bookkeeping on the controller-tracked state
    const Eigen::Vector4d& track_state =
        (cfg.controller == ControllerKind::mpc) ? world.x : st.z;
    while (wp_index + 1 < setup.waypoints.size() &&
           (track_state.head<2>() - setup.waypoints[wp_index]).norm() < setup.waypoint_radius) {
      ++wp_index;
      res.log.events.push_back("waypoint_reached " + std::to_string(k));
    }
    const Eigen::Vector2d wp = setup.waypoints[wp_index];
    Eigen::Vector4d ref;
    ref << wp(0), wp(1), 0, 0;

    // disturbance target follows the active waypoint
    if (setup.mode.kind == DisturbanceMode::Kind::attract ||
        setup.mode.kind == DisturbanceMode::Kind::repel)
      setup.mode.target = wp;

    const Eigen::Vector4d z_pre = (cfg.controller == ControllerKind::mpc) ? world.x : st.z;
    StepResult out;
    if (cfg.controller == ControllerKind::mpc) {
      out = mpc_step(d.sys, world.x, ref, cost, N, X, d.U, cfg.use_terminal ? &d.Zf : nullptr);
      if (!out.report.feasible) out.u.setZero();  // simulator fallback: hold zero input
      st.z = world.x;
    } else if (cfg.controller == ControllerKind::tmpc) {
      out = tmpc_step(d, world.x, st, ref, cost, Xt, d.Ut,
                      cfg.use_terminal ? &d.Zf_tight : nullptr);
    } else {
      out = sddtmpc_step(d, world.x, st, ref, cost, X, d.U, Xt, d.Ut, model, sdd_opt);
    }

    TrajectoryRow row;
    row.k = k;
    row.t = k * d.sys.Ts;
    row.x = world.x;
    row.z = z_pre;
    row.u = out.u;
    row.v = out.v_seq.cols() ? Eigen::Vector2d(out.v_seq.col(0)) : Eigen::Vector2d::Zero();
    row.beta = setup.beta(world);
    row.cost = out.report.objective;
    row.feasible = out.report.feasible;
    if (!out.report.feasible) {
      ++res.summary.infeasible_steps;
      res.log.events.push_back("infeasible " + std::to_string(k));
      if (k == 0) res.summary.infeasible_at_start = true;
      if (k == 0 && cfg.controller != ControllerKind::sddtmpc) {
        res.log.rows.push_back(row);
        break;  // baseline cannot even start (scenario-3 probe relies on this)
      }
    }
    if (k == 0 && cfg.id != "s4") res.summary.decision_cost = out.report.objective;

    // world update
    const Ellipse2 true_set = true_disturbance_set(world, std::max(1e-6, setup.beta(world)),
                                                   cfg.intensity);
    row.w = sample_disturbance(true_set, setup.mode, world.x.head<2>(), rng);
    res.log.rows.push_back(row);
    res.summary.total_realized_cost +=
        (world.x - ref).dot(d.Q * (world.x - ref)) + out.u.dot(d.R * out.u);
    res.summary.total_nominal_cost +=
        (z_pre - ref).dot(d.Q * (z_pre - ref)) + row.v.dot(d.R * row.v);
    world = holonomic_step(world, out.u, row.w);

    // wall-distance and crash bookkeeping on the realized state
    if (cfg.id == "s2")
      res.summary.min_wall_distance = std::min(res.summary.min_wall_distance, world.x(1));
    res.summary.farthest_px = std::max(res.summary.farthest_px, world.x(0));
    for (size_t r = 0; r < setup.hard_rows_n.size(); ++r) {
      if (setup.hard_rows_n[r].dot(world.x) > setup.hard_rows_b[r] + 1e-9) {
        res.summary.crashed = true;
        res.log.events.push_back("crash " + std::to_string(k));
      }
    }
    if (res.summary.crashed) break;

    // goal predicates
    if (setup.goal_is_px && world.x(0) >= setup.goal_px) {
      res.summary.mission_time = (k + 1) * d.sys.Ts;
      break;
    }
    if (!setup.goal_is_px && wp_index + 1 == setup.waypoints.size() &&
        (track_state.head<2>() - setup.waypoints.back()).norm() < setup.waypoint_radius) {
      res.summary.mission_time = (k + 1) * d.sys.Ts;
      break;
    }
  }
  if (!res.log.rows.empty()) {
    const auto& last = res.log.rows.back();
    res.summary.final_error =
        (last.x.head<2>() - setup.waypoints.back()).norm();
  }
  // scenario 4 compares the accumulated cost of the branch trajectories
  if (cfg.id == "s4") res.summary.decision_cost = res.summary.total_nominal_cost;
  return res;
}

// ---------------------------------------------------------------------------
// Unicycle study

struct UnicycleRunResult {
  TrajectoryLog follower;   // x = [px, py, psi, 0]
  TrajectoryLog leader;
  RunSummary summary;
  double rise_time = std::numeric_limits<double>::quiet_NaN();  // to 0.05 m
  int steps_nominal_outside_v = 0;   // nominal input outside 0.6636 U
  bool inputs_admissible = true;     // realized u in U at every step
  double max_heading_error = 0.0;    // |psi_x - psi_z|
  int containment_violations = 0;    // realized state outside the first tube section
};

inline UnicycleRunResult run_unicycle(const ScenarioConfig& cfg) {
  const UnicycleSynthesis syn;
  UnicycleRunResult res;
  const Eigen::Vector3d xR0(0, 0, M_PI / 3);
  Eigen::Vector3d x(0.4, -0.2, -M_PI / 2);

  std::mt19937_64 rng(cfg.seed * 88172645463325252ull + 7ull);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const bool disturbed = cfg.disturbance_case != "none";

  SwarmConfig swarm;
  swarm.iterations = cfg.pso_iterations;
  swarm.seed = cfg.seed + 3;

  UnicycleControllerState st;
  const auto U = input_diamond(syn);
  const auto V = input_diamond(syn, syn.v_const);

  const int steps = std::min(cfg.max_steps, 100);
  double t = 0.0;
  for (int k = 0; k < steps; ++k) {
    std::vector<Eigen::Vector3d> leader(syn.N + 1);
    for (int i = 0; i <= syn.N; ++i)
      leader[i] = leader_state(xR0, syn.nuR, syn.omegaR, t + i * syn.Ts);

    UnicycleStepResult out;
    if (cfg.controller == ControllerKind::sddtmpc) {
      UnicycleControllerState base_st = st;
      const auto base = ntmpc_step(syn, x, leader, base_st, swarm);
      Vector ws(3 + 2 * syn.N);
      ws.head(3) << base.z0(0) - x(0), base.z0(1) - x(1), wrap_angle(base.z0(2) - x(2));
      for (int i = 0; i < syn.N; ++i) ws.segment(3 + 2 * i, 2) = base.v_seq.col(i);
      out = sddtmpc_unicycle_step(syn, x, leader, st, swarm, ws);
    } else {
      out = ntmpc_step(syn, x, leader, st, swarm);
    }

    if (!V.contains(out.v0, 1e-9)) ++res.steps_nominal_outside_v;
    if (!U.contains(out.u, 1e-9)) res.inputs_admissible = false;
    res.max_heading_error =
        std::max(res.max_heading_error, std::abs(wrap_angle(x(2) - out.z0(2))));
    if (!out.report.feasible) ++res.summary.infeasible_steps;

    // one Ts of the true continuous dynamics with a held disturbance
    Eigen::Vector2d w = Eigen::Vector2d::Zero();
    if (disturbed) {
      const double ang = 2.0 * M_PI * u01(rng);
      const double mag = syn.eta * u01(rng);
      w << mag * std::cos(ang), mag * std::sin(ang);
    }
    Vector s(3);
    s = x;
    const auto field = [&](const Vector& q) {
      const auto uu = ancillary_unicycle(q.head<3>(), out.z0, out.v0, syn.Ke, syn.rho);
      return Vector(unicycle_derivative(q.head<3>(), uu, w, syn.rho));
    };
    s = integrate_adaptive(field, s, syn.Ts, 1e-9, 1e-11);
    Eigen::Vector3d x_next = s.head<3>();
    x_next(2) = wrap_angle(x_next(2));

    // tube containment of the realized next state (first plan section)
    if (cfg.controller == ControllerKind::sddtmpc && out.tube.size() > 1) {
      const Eigen::Vector3d z1 = unicycle_nominal_step(out.z0, out.v0, syn.rho, syn.Ts);
      const auto& E1 = out.tube[1];
      if (!E1.e1.contains(x_next(0) - z1(0), 1e-9) ||
          !E1.e2.contains(x_next(1) - z1(1), 1e-9) ||
          !E1.e3.contains(wrap_angle(x_next(2) - z1(2)), 1e-9))
        ++res.containment_violations;
    }

    const Eigen::Vector3d xR = leader_state(xR0, syn.nuR, syn.omegaR, t);
    Eigen::Matrix2d R;
    R << std::cos(xR(2)), -std::sin(xR(2)), std::sin(xR(2)), std::cos(xR(2));
    const Eigen::Vector2d target = xR.head<2>() + R * syn.p_d;
    const double dist = (x.head<2>() - target).norm();
    if (std::isnan(res.rise_time) && dist < 0.05) res.rise_time = t;

    TrajectoryRow row;
    row.k = k;
    row.t = t;
    row.x << x(0), x(1), x(2), 0.0;
    row.z << out.z0(0), out.z0(1), out.z0(2), 0.0;
    row.u = out.u;
    row.v = out.v0;
    row.w = w;
    row.beta = 1.0;
    row.cost = out.report.objective;
    row.feasible = out.report.feasible;
    res.follower.rows.push_back(row);

    TrajectoryRow lrow;
    lrow.k = k;
    lrow.t = t;
    lrow.x << xR(0), xR(1), xR(2), 0.0;
    res.leader.rows.push_back(lrow);

    x = x_next;
    t += syn.Ts;
  }
  // final tracking error
  const Eigen::Vector3d xR = leader_state(xR0, syn.nuR, syn.omegaR, t);
  Eigen::Matrix2d R;
  R << std::cos(xR(2)), -std::sin(xR(2)), std::sin(xR(2)), std::cos(xR(2));
  res.summary.final_error = (x.head<2>() - (xR.head<2>() + R * syn.p_d)).norm();
  res.summary.mission_time = res.rise_time;
  return res;
}

}  // namespace sddtmpc
