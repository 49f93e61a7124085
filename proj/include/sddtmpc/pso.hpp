#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <functional>
#include <random>
#include <vector>

#include "sddtmpc/geometry.hpp"
#include "sddtmpc/qp.hpp"

namespace sddtmpc {

struct SwarmConfig {
  int particles = 50;
  int iterations = 60;
  double inertia = 0.729;      // constriction values
  double cognitive = 1.49445;
  double social = 1.49445;
  double penalty_weight = 1e4;
  std::uint64_t seed = 0;
  Box bounds;
};

/// Global-best particle swarm over box bounds, minimizing
///   objective(x) + penalty_weight * sum(max(0, residual_i(x))^2).
/// Bests are compared feasible-first (a feasible point always beats an
/// infeasible one; the penalized value ranks within each class), so a feasible
/// warm start is never displaced by a cheap constraint violation. One particle
/// starts at `warm_start` (clamped to bounds). Deterministic for a fixed seed.
/// Always returns the best-so-far point; `feasible` is false when its
/// residuals exceed 1e-6.
inline SolveReport pso_minimize(const std::function<double(const Vector&)>& objective,
                                const std::function<Vector(const Vector&)>& constraints,
                                const SwarmConfig& cfg, const Vector& warm_start,
                                std::vector<double>* best_trace = nullptr,
                                const std::vector<Vector>* extra_seeds = nullptr) {
  const auto t_start = std::chrono::steady_clock::now();
  const int dim = cfg.bounds.dim();
  const Vector lo = cfg.bounds.lower, hi = cfg.bounds.upper;
  const Vector range = hi - lo;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  struct Score {
    double value = std::numeric_limits<double>::infinity();  // penalized objective
    double violation = std::numeric_limits<double>::infinity();

    bool feasible() const { return violation <= 1e-6; }
    bool better_than(const Score& o) const {
      if (feasible() != o.feasible()) return feasible();
      return value < o.value;
    }
  };

  const auto evaluate = [&](const Vector& x) {
    Score s;
    double pen = 0.0;
    s.violation = 0.0;
    if (constraints) {
      const Vector r = constraints(x);
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double v = std::max(0.0, r(i));
        pen += v * v;
        s.violation = std::max(s.violation, v);
      }
    }
    s.value = objective(x) + cfg.penalty_weight * pen;
    return s;
  };

  std::vector<Vector> pos(cfg.particles), vel(cfg.particles), pbest(cfg.particles);
  std::vector<Score> pbest_sc(cfg.particles);
  Vector gbest;
  Score gbest_sc;

  for (int i = 0; i < cfg.particles; ++i) {
    Vector x(dim), v(dim);
    for (int d = 0; d < dim; ++d) {
      x(d) = lo(d) + u01(rng) * range(d);
      v(d) = 0.1 * range(d) * (2.0 * u01(rng) - 1.0);
    }
    if (i == 0 && warm_start.size() == dim)
      x = warm_start.cwiseMax(lo).cwiseMin(hi);
    if (extra_seeds && i >= 1 && i <= static_cast<int>(extra_seeds->size()) &&
        (*extra_seeds)[i - 1].size() == dim)
      x = (*extra_seeds)[i - 1].cwiseMax(lo).cwiseMin(hi);
    pos[i] = x;
    vel[i] = v;
    pbest[i] = x;
    pbest_sc[i] = evaluate(x);
    if (pbest_sc[i].better_than(gbest_sc)) {
      gbest_sc = pbest_sc[i];
      gbest = x;
    }
  }
  if (best_trace) best_trace->push_back(gbest_sc.value);

  for (int it = 0; it < cfg.iterations; ++it) {
    for (int i = 0; i < cfg.particles; ++i) {
      for (int d = 0; d < dim; ++d) {
        const double r1 = u01(rng), r2 = u01(rng);
        vel[i](d) = cfg.inertia * vel[i](d) +
                    cfg.cognitive * r1 * (pbest[i](d) - pos[i](d)) +
                    cfg.social * r2 * (gbest(d) - pos[i](d));
        vel[i](d) = std::clamp(vel[i](d), -range(d), range(d));
      }
      pos[i] += vel[i];
      // reflect at the box walls
      for (int d = 0; d < dim; ++d) {
        if (pos[i](d) < lo(d)) {
          pos[i](d) = std::min(hi(d), 2.0 * lo(d) - pos[i](d));
          vel[i](d) = -0.5 * vel[i](d);
        } else if (pos[i](d) > hi(d)) {
          pos[i](d) = std::max(lo(d), 2.0 * hi(d) - pos[i](d));
          vel[i](d) = -0.5 * vel[i](d);
        }
      }
      const Score sc = evaluate(pos[i]);
      if (sc.better_than(pbest_sc[i])) {
        pbest_sc[i] = sc;
        pbest[i] = pos[i];
      }
      if (sc.better_than(gbest_sc)) {
        gbest_sc = sc;
        gbest = pos[i];
      }
    }
    if (best_trace) best_trace->push_back(gbest_sc.value);
  }

  SolveReport rep;
  rep.solution = gbest;
  rep.objective = objective(gbest);
  rep.constraint_violation = gbest_sc.violation;
  rep.feasible = gbest_sc.feasible();
  rep.iterations_used = cfg.iterations;
  rep.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

}  // namespace sddtmpc
