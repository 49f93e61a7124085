#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "sddtmpc/geometry.hpp"

namespace sddtmpc {

// ---------------------------------------------------------------------------
// Holonomic robot (case study 1)

/// State [p_x, p_y, v_x, v_y]; inputs are accelerations [a_x, a_y].
struct HolonomicState {
  Eigen::Vector4d x = Eigen::Vector4d::Zero();

  double px() const { return x(0); }
  double py() const { return x(1); }
  double vx() const { return x(2); }
  double vy() const { return x(3); }
  double speed() const { return std::hypot(x(2), x(3)); }
};

inline constexpr double kHolonomicTs = 0.1;  // [s]

inline Matrix holonomic_A() {
  Matrix A(4, 4);
  A << 1, 0, kHolonomicTs, 0, 0, 1, 0, kHolonomicTs, 0, 0, 1, 0, 0, 0, 0, 1;
  return A;
}

inline Matrix holonomic_B() {
  Matrix B(4, 2);
  B << 0, 0, 0, 0, kHolonomicTs, 0, 0, kHolonomicTs;
  return B;
}

/// Exact linear update; the planar disturbance acts on position only.
inline HolonomicState holonomic_step(const HolonomicState& s, const Eigen::Vector2d& u,
                                     const Eigen::Vector2d& w) {
  HolonomicState n;
  n.x = holonomic_A() * s.x + holonomic_B() * u;
  n.x.head<2>() += w;
  return n;
}

/// Ground-truth state-dependent disturbance ellipse:
///   r_min = 0.225 beta^2 sqrt(|v|),  r_max = 0.202 |v| + r_min,
/// major axis along the velocity. `intensity` scales both radii.
inline Ellipse2 true_disturbance_set(const HolonomicState& s, double beta,
                                     double intensity = 1.0) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must be in (0,1]");
  const double v = s.speed();
  const double rmin = 0.225 * beta * beta * std::sqrt(v);
  const double rmax = 0.202 * v + rmin;
  const double heading = v < 1e-9 ? 0.0 : std::atan2(s.vy(), s.vx());
  return Ellipse2(intensity * rmax, intensity * rmin, heading);
}

/// Slipperiness fields used by the scenarios. The two-zone field splits the
/// plane along a line n.p = b (beta = 1 on the n side, beta_low on the other);
/// a horizontal split is the (0,1) special case.
struct BetaField {
  enum class Kind { constant, corridor, two_zone } kind = Kind::constant;
  Eigen::Vector2d split_n = Eigen::Vector2d(0, 1);  // two_zone boundary normal
  double split_b = 0.0;                             // two_zone boundary offset
  double beta_low = 0.4;  // two_zone: value on the low side

  double operator()(const HolonomicState& s) const {
    switch (kind) {
      case Kind::constant: return 1.0;
      case Kind::corridor: return 1.0 / (std::abs(5.0 - s.px()) + 1.0);
      case Kind::two_zone:
        return split_n.dot(s.x.head<2>()) > split_b ? 1.0 : beta_low;
    }
    return 1.0;
  }

  /// Largest value over the position box [p +- h]; used when bounding the
  /// disturbances of a whole reach set rather than a point.
  double max_over(const HolonomicState& s, double hx, double hy) const {
    switch (kind) {
      case Kind::constant: return 1.0;
      case Kind::corridor: {
        const double lo = s.px() - hx, hi = s.px() + hx;
        const double closest = std::clamp(5.0, lo, hi);
        return 1.0 / (std::abs(5.0 - closest) + 1.0);
      }
      case Kind::two_zone:
        return (split_n.dot(s.x.head<2>()) + std::abs(split_n.x()) * hx +
                std::abs(split_n.y()) * hy) > split_b
                   ? 1.0
                   : beta_low;
    }
    return 1.0;
  }

  static BetaField constant() { return {}; }
  static BetaField corridor() {
    BetaField f;
    f.kind = Kind::corridor;
    return f;
  }
  static BetaField two_zone(double split_y, double beta_low) {
    return two_zone_line({0.0, 1.0}, split_y, beta_low);
  }
  static BetaField two_zone_line(const Eigen::Vector2d& n, double b, double beta_low) {
    BetaField f;
    f.kind = Kind::two_zone;
    f.split_n = n.normalized();
    f.split_b = b / n.norm();
    f.beta_low = beta_low;
    return f;
  }
};

struct DisturbanceMode {
  enum class Kind { none, attract, repel, push_up, push_down, uniform_random } kind = Kind::none;
  Eigen::Vector2d target = Eigen::Vector2d::Zero();  // attract/repel reference point

  static DisturbanceMode none() { return {}; }
  static DisturbanceMode attract(const Eigen::Vector2d& t) { return {Kind::attract, t}; }
  static DisturbanceMode repel(const Eigen::Vector2d& t) { return {Kind::repel, t}; }
  static DisturbanceMode push_up() { return {Kind::push_up, {}}; }
  static DisturbanceMode push_down() { return {Kind::push_down, {}}; }
  static DisturbanceMode uniform_random() { return {Kind::uniform_random, {}}; }
};

/// Draw a disturbance inside `set`. Directional modes take the boundary point
/// in the requested direction scaled by 0.9 with +-10% radial jitter;
/// uniform_random is uniform by area.
inline Eigen::Vector2d sample_disturbance(const Ellipse2& set, const DisturbanceMode& mode,
                                          const Eigen::Vector2d& position, std::mt19937_64& rng) {
  if (mode.kind == DisturbanceMode::Kind::none || set.r_max <= 0.0)
    return Eigen::Vector2d::Zero();
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto boundary_toward = [&set](const Eigen::Vector2d& dir) -> Eigen::Vector2d {
    const double n = dir.norm();
    if (n < 1e-12) return Eigen::Vector2d::Zero();
    const double c = std::cos(set.heading), s = std::sin(set.heading);
    // direction in ellipse axes
    const Eigen::Vector2d d(c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y());
    const double denom = std::hypot(d.x() / std::max(set.r_max, 1e-300),
                                    set.r_min > 0 ? d.y() / set.r_min : (d.y() == 0 ? 0 : 1e300));
    if (denom < 1e-300) return Eigen::Vector2d::Zero();
    const double t = d.norm() / denom;  // |boundary point| along dir
    return t * dir / n;
  };

  switch (mode.kind) {
    case DisturbanceMode::Kind::attract:
    case DisturbanceMode::Kind::repel: {
      Eigen::Vector2d dir = mode.target - position;
      if (mode.kind == DisturbanceMode::Kind::repel) dir = -dir;
      const double scale = 0.9 * (1.0 + 0.1 * (2.0 * unit(rng) - 1.0));
      return scale * boundary_toward(dir);
    }
    case DisturbanceMode::Kind::push_up:
    case DisturbanceMode::Kind::push_down: {
      const Eigen::Vector2d dir(0.0, mode.kind == DisturbanceMode::Kind::push_up ? 1.0 : -1.0);
      const double scale = 0.9 * (1.0 + 0.1 * (2.0 * unit(rng) - 1.0));
      return scale * boundary_toward(dir);
    }
    case DisturbanceMode::Kind::uniform_random: {
      // uniform on the unit disc, then stretch onto the ellipse axes
      const double r = std::sqrt(unit(rng));
      const double t = 2.0 * M_PI * unit(rng);
      const Eigen::Vector2d p(set.r_max * r * std::cos(t), set.r_min * r * std::sin(t));
      const double c = std::cos(set.heading), s = std::sin(set.heading);
      return {c * p.x() - s * p.y(), s * p.x() + c * p.y()};
    }
    default: return Eigen::Vector2d::Zero();
  }
}

// ---------------------------------------------------------------------------
// Leader-follower unicycles (case study 2)

/// Follower state [p_x, p_y, psi] of the head point; psi wrapped to (-pi, pi].
struct UnicycleState {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
};

inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0) a += 2.0 * M_PI;
  return a - M_PI;
}

/// Head-point kinematics of the follower; planar disturbance on the position
/// rates only.
inline Eigen::Vector3d unicycle_derivative(const Eigen::Vector3d& x, const Eigen::Vector2d& u,
                                           const Eigen::Vector2d& w, double rho) {
  const double c = std::cos(x(2)), s = std::sin(x(2));
  return {u(0) * c - rho * u(1) * s + w(0), u(0) * s + rho * u(1) * c + w(1), u(1)};
}

/// Leader kinematics (center point, no disturbance).
inline Eigen::Vector3d leader_derivative(const Eigen::Vector3d& x, double nuR, double omegaR) {
  return {nuR * std::cos(x(2)), nuR * std::sin(x(2)), omegaR};
}

// ---------------------------------------------------------------------------
// Adaptive integrator (Dormand-Prince 4(5) embedded pair)

/// Integrate x' = f(x) over [0, horizon] with u, w zero-order-held inside f.
/// Step size adapts on the embedded error estimate against rtol/atol.
template <typename F>
Vector integrate_adaptive(F&& f, Vector x, double horizon, double rtol = 1e-8,
                          double atol = 1e-10) {
  double t = 0.0;
  double h = horizon / 10.0;
  int guard = 0;
  while (t < horizon - 1e-15) {
    if (++guard > 1000000) throw std::runtime_error("integrate_adaptive: step limit");
    h = std::min(h, horizon - t);
    if (h < 1e-12) throw std::runtime_error("integrate_adaptive: step-size underflow");
    const Vector k1 = f(x);
    const Vector k2 = f(x + h * (k1 / 5.0));
    const Vector k3 = f(x + h * (3.0 / 40 * k1 + 9.0 / 40 * k2));
    const Vector k4 = f(x + h * (44.0 / 45 * k1 - 56.0 / 15 * k2 + 32.0 / 9 * k3));
    const Vector k5 =
        f(x + h * (19372.0 / 6561 * k1 - 25360.0 / 2187 * k2 + 64448.0 / 6561 * k3 -
                   212.0 / 729 * k4));
    const Vector k6 = f(x + h * (9017.0 / 3168 * k1 - 355.0 / 33 * k2 + 46732.0 / 5247 * k3 +
                                 49.0 / 176 * k4 - 5103.0 / 18656 * k5));
    const Vector x5 = x + h * (35.0 / 384 * k1 + 500.0 / 1113 * k3 + 125.0 / 192 * k4 -
                               2187.0 / 6784 * k5 + 11.0 / 84 * k6);
    const Vector k7 = f(x5);
    const Vector x4 = x + h * (5179.0 / 57600 * k1 + 7571.0 / 16695 * k3 + 393.0 / 640 * k4 -
                               92097.0 / 339200 * k5 + 187.0 / 2100 * k6 + 1.0 / 40 * k7);
    double err = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double sc = atol + rtol * std::max(std::abs(x(i)), std::abs(x5(i)));
      err = std::max(err, std::abs(x5(i) - x4(i)) / sc);
    }
    if (err <= 1.0) {
      t += h;
      x = x5;
    }
    const double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
    h *= std::clamp(fac, 0.2, 5.0);
  }
  return x;
}

}  // namespace sddtmpc
