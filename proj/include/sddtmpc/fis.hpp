#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sddtmpc/geometry.hpp"
#include "sddtmpc/world.hpp"

namespace sddtmpc {

inline constexpr double kSpeedMax = 2.0 * M_SQRT2;  // |v| bound from the velocity box
inline constexpr double kWmaxRadius = 0.202 * kSpeedMax + 0.225 * 1.5650845800732873;
// 0.225*sqrt(2*sqrt(2)) = 0.3521...; kWmaxRadius = worst-case major radius ~0.9498

/// Triangular membership with unit peak at `center`.
struct MembershipFn {
  double center = 0.0;
  double half_width = 1.0;

  double eval(double x) const { return std::max(0.0, 1.0 - std::abs(x - center) / half_width); }
};

/// One TSK rule: product antecedent over (speed, beta), quadratic consequent
/// r = c1 nu^2 + c2 b^2 + c3 nu b + c4 nu + c5 b + c6.
struct TskRule {
  MembershipFn speed_mf;
  MembershipFn beta_mf;
  Eigen::Matrix<double, 6, 1> coeffs = Eigen::Matrix<double, 6, 1>::Zero();

  double firing(double nu, double beta) const { return speed_mf.eval(nu) * beta_mf.eval(beta); }
  double consequent(double nu, double beta) const {
    return coeffs(0) * nu * nu + coeffs(1) * beta * beta + coeffs(2) * nu * beta +
           coeffs(3) * nu + coeffs(4) * beta + coeffs(5);
  }
};

/// 25-rule TSK system on the 5x5 full-overlap triangular grid over
/// (speed in [0, 2*sqrt(2)], beta in [0, 1]); output clipped to [0, wmax_radius].
struct FisModel {
  std::vector<TskRule> rules;
  std::string output_label;       // "major" | "minor"
  double wmax_radius = kWmaxRadius;
  // conformal-style calibration offset: the largest under-prediction seen on
  // the validation split, added when the model feeds set construction
  double safety_margin = 0.0;

  static FisModel grid5(std::string label, double wmax = kWmaxRadius) {
    FisModel m;
    m.output_label = std::move(label);
    m.wmax_radius = wmax;
    const double wn = kSpeedMax / 4.0, wb = 1.0 / 4.0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        TskRule r;
        r.speed_mf = {i * wn, wn};
        r.beta_mf = {j * wb, wb};
        m.rules.push_back(r);
      }
    return m;
  }

  /// Weighted-average defuzzification; inputs clamped to the grid domain
  /// (`clamped` reports when that happened), output clipped to [0, wmax].
  double eval(double nu, double beta, bool* clamped = nullptr) const {
    const double nu_c = std::clamp(nu, 0.0, kSpeedMax);
    const double beta_c = std::clamp(beta, 0.0, 1.0);
    if (clamped) *clamped = (nu_c != nu) || (beta_c != beta);
    double num = 0.0, den = 0.0;
    for (const auto& r : rules) {
      const double w = r.firing(nu_c, beta_c);
      if (w > 0.0) {
        num += w * r.consequent(nu_c, beta_c);
        den += w;
      }
    }
    if (den <= 1e-12) throw std::logic_error("FisModel: no rule fires (broken partition)");
    return std::clamp(num / den, 0.0, wmax_radius);
  }

  /// Prediction used for set construction: raw output plus the calibration
  /// margin, still capped by the bound.
  double eval_conservative(double nu, double beta) const {
    return std::min(eval(nu, beta) + safety_margin, wmax_radius);
  }

  Eigen::VectorXd pack_coeffs() const {
    Eigen::VectorXd c(6 * rules.size());
    for (size_t r = 0; r < rules.size(); ++r) c.segment<6>(6 * r) = rules[r].coeffs;
    return c;
  }
  void unpack_coeffs(const Eigen::VectorXd& c) {
    for (size_t r = 0; r < rules.size(); ++r) rules[r].coeffs = c.segment<6>(6 * r);
  }
};

// ---------------------------------------------------------------------------
// Data generation and supervised GA training

struct DisturbanceDataset {
  Eigen::MatrixX2d inputs;    // rows (nu, beta)
  Eigen::MatrixX2d targets;   // rows (r_max, r_min)
  std::vector<int> train_idx, val_idx, test_idx;
};

/// Uniform samples over the admissible (nu, beta) box, targets from the
/// ground-truth ellipse law. First 1240 points split 660:580 train:validation,
/// the remainder is the test set.
inline DisturbanceDataset gen_dataset(int n_train_val, int n_test, std::uint64_t seed) {
  DisturbanceDataset ds;
  const int n = n_train_val + n_test;
  ds.inputs.resize(n, 2);
  ds.targets.resize(n, 2);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const double nu = u01(rng) * kSpeedMax;
    const double beta = 1.0 - u01(rng);  // (0, 1]
    HolonomicState s;
    s.x << 0, 0, nu, 0;
    const Ellipse2 e = true_disturbance_set(s, beta);
    ds.inputs.row(i) << nu, beta;
    ds.targets.row(i) << e.r_max, e.r_min;
  }
  const int n_train = n_train_val * 660 / 1240;
  for (int i = 0; i < n_train; ++i) ds.train_idx.push_back(i);
  for (int i = n_train; i < n_train_val; ++i) ds.val_idx.push_back(i);
  for (int i = n_train_val; i < n; ++i) ds.test_idx.push_back(i);
  return ds;
}

struct GaConfig {
  int population = 60;
  int generations = 400;
  double mutation_rate = 0.1;           // per-gene probability
  double mutation_sigma_frac = 0.1;     // of the seeded coefficient spread
  double negative_penalty_weight = 3000;
  std::uint64_t seed = 0;
};

struct GaTracePoint {
  int generation;
  double best_fitness;
  double neg_error_rate;  // on the training split
};

namespace detail {

/// Regressor row phi(x) with prediction = phi(x) . packed_coeffs before clipping.
inline Eigen::VectorXd fis_features(const FisModel& m, double nu, double beta) {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(6 * m.rules.size());
  double den = 0.0;
  for (const auto& r : m.rules) den += r.firing(nu, beta);
  Eigen::Matrix<double, 6, 1> basis;
  basis << nu * nu, beta * beta, nu * beta, nu, beta, 1.0;
  for (size_t r = 0; r < m.rules.size(); ++r) {
    const double w = m.rules[r].firing(nu, beta) / den;
    if (w > 0.0) phi.segment<6>(6 * r) = w * basis;
  }
  return phi;
}

}  // namespace detail

/// Real-coded GA over the consequent coefficients (memberships stay fixed).
/// Fitness = train MSE + lambda * mean(max(0, target - prediction)^2); the
/// population is seeded around the ridge least-squares fit. `column` selects
/// the target (0 = major, 1 = minor).
inline FisModel train_ga(const DisturbanceDataset& ds, int column, const GaConfig& cfg,
                         std::vector<GaTracePoint>* trace = nullptr) {
  FisModel model = FisModel::grid5(column == 0 ? "major" : "minor");
  const int ng = static_cast<int>(6 * model.rules.size());
  const int nt = static_cast<int>(ds.train_idx.size());
  if (nt == 0) throw std::invalid_argument("train_ga: empty training split");

  Eigen::MatrixXd Phi(nt, ng);
  Eigen::VectorXd y(nt);
  for (int i = 0; i < nt; ++i) {
    const int k = ds.train_idx[i];
    Phi.row(i) = detail::fis_features(model, ds.inputs(k, 0), ds.inputs(k, 1)).transpose();
    y(i) = ds.targets(k, column);
  }

  const auto fitness = [&](const Eigen::VectorXd& c, double* neg_rate) {
    Eigen::VectorXd pred = (Phi * c).cwiseMax(0.0).cwiseMin(model.wmax_radius);
    const Eigen::VectorXd err = pred - y;
    const Eigen::VectorXd neg = (-err).cwiseMax(0.0);
    if (neg_rate) *neg_rate = static_cast<double>((err.array() < 0.0).count()) / nt;
    return err.squaredNorm() / nt + cfg.negative_penalty_weight * neg.squaredNorm() / nt;
  };

  // ridge least-squares seed, plus an asymmetric refit: points currently
  // under-predicted get weight (1 + lambda), which is the penalty's own
  // curvature, so a few reweighted passes land near the fitness optimum
  const Eigen::MatrixXd G0 = Phi.transpose() * Phi + 1e-9 * Eigen::MatrixXd::Identity(ng, ng);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt0(G0);
  const Eigen::VectorXd c_ls = ldlt0.solve(Phi.transpose() * y);
  Eigen::VectorXd c_irls = c_ls;
  for (int pass = 0; pass < 8; ++pass) {
    Eigen::VectorXd w = Eigen::VectorXd::Ones(nt);
    const Eigen::VectorXd pred = Phi * c_irls;
    for (int i = 0; i < nt; ++i)
      if (pred(i) < y(i)) w(i) += cfg.negative_penalty_weight;
    const Eigen::MatrixXd Gw =
        Phi.transpose() * w.asDiagonal() * Phi + 1e-9 * Eigen::MatrixXd::Identity(ng, ng);
    c_irls = Gw.ldlt().solve(Phi.transpose() * (w.asDiagonal() * y));
  }
  const double spread = std::max(1e-3, c_ls.cwiseAbs().maxCoeff());
  const double sigma0 = cfg.mutation_sigma_frac * spread;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<Eigen::VectorXd> pop(cfg.population);
  std::vector<double> fit(cfg.population);
  for (int i = 0; i < cfg.population; ++i) {
    Eigen::VectorXd c = (i % 2 == 0) ? c_ls : c_irls;
    if (i == 2) {
      for (size_t r = 0; r < model.rules.size(); ++r) c(6 * r + 5) += 0.001;  // shifted-up seed
    } else if (i > 2) {
      const double s = sigma0 * std::pow(10.0, -3.0 * u01(rng));  // multi-scale init
      for (int g = 0; g < ng; ++g) c(g) += s * gauss(rng);
    }
    pop[i] = c;
    fit[i] = fitness(c, nullptr);
  }

  const auto tournament = [&]() -> int {
    int best = static_cast<int>(u01(rng) * cfg.population);
    for (int k = 1; k < 3; ++k) {
      const int cand = static_cast<int>(u01(rng) * cfg.population);
      if (fit[cand] < fit[best]) best = cand;
    }
    return best;
  };

  for (int gen = 0; gen < cfg.generations; ++gen) {
    // mutation scale anneals so late generations can polish sub-1e-4 residuals
    const double frac = static_cast<double>(gen) / std::max(1, cfg.generations - 1);
    const double sigma = sigma0 * std::pow(1e-4, frac);
    int elite = 0;
    for (int i = 1; i < cfg.population; ++i)
      if (fit[i] < fit[elite]) elite = i;
    if (trace) {
      double nr = 0.0;
      fitness(pop[elite], &nr);
      trace->push_back({gen, fit[elite], nr});
    }
    std::vector<Eigen::VectorXd> next(cfg.population);
    std::vector<double> nfit(cfg.population);
    next[0] = pop[elite];
    nfit[0] = fit[elite];
    for (int i = 1; i < cfg.population; ++i) {
      const Eigen::VectorXd& p1 = pop[tournament()];
      const Eigen::VectorXd& p2 = pop[tournament()];
      Eigen::VectorXd child(ng);
      for (int g = 0; g < ng; ++g) {
        const double a = u01(rng);
        child(g) = a * p1(g) + (1.0 - a) * p2(g);
        if (u01(rng) < cfg.mutation_rate) child(g) += sigma * gauss(rng);
      }
      next[i] = child;
      nfit[i] = fitness(child, nullptr);
    }
    pop.swap(next);
    fit.swap(nfit);
  }

  int elite = 0;
  for (int i = 1; i < cfg.population; ++i)
    if (fit[i] < fit[elite]) elite = i;
  if (trace) {
    double nr = 0.0;
    fitness(pop[elite], &nr);
    trace->push_back({cfg.generations, fit[elite], nr});
  }
  model.unpack_coeffs(pop[elite]);
  // calibrate the control-side margin on the held-out split
  double max_under = 0.0;
  for (int k : ds.val_idx) {
    const double err = ds.targets(k, column) - model.eval(ds.inputs(k, 0), ds.inputs(k, 1));
    max_under = std::max(max_under, err);
  }
  model.safety_margin = max_under;
  return model;
}

/// Normalized error statistics on a dataset split (errors divided by the
/// maximum ground-truth value of the selected output, as in the reference
/// evaluation protocol).
struct FisErrorStats {
  double neg_frequency = 0.0;
  double mean_neg = 0.0;
  double mean_pos = 0.0;
  double max_neg = 0.0;
  double max_pos = 0.0;
  double mse = 0.0;
};

inline FisErrorStats evaluate_fis(const FisModel& m, const DisturbanceDataset& ds, int column,
                                  const std::vector<int>& idx) {
  FisErrorStats st;
  double norm = 0.0;
  for (int k : idx) norm = std::max(norm, ds.targets(k, column));
  if (norm <= 0.0) norm = 1.0;
  int n_neg = 0, n_pos = 0;
  for (int k : idx) {
    const double pred = m.eval(ds.inputs(k, 0), ds.inputs(k, 1));
    const double err = (pred - ds.targets(k, column)) / norm;
    st.mse += err * err;
    if (err < 0.0) {
      ++n_neg;
      st.mean_neg += -err;
      st.max_neg = std::max(st.max_neg, -err);
    } else {
      ++n_pos;
      st.mean_pos += err;
      st.max_pos = std::max(st.max_pos, err);
    }
  }
  const int n = static_cast<int>(idx.size());
  st.mse /= std::max(1, n);
  st.neg_frequency = static_cast<double>(n_neg) / std::max(1, n);
  if (n_neg) st.mean_neg /= n_neg;
  if (n_pos) st.mean_pos /= n_pos;
  return st;
}

// ---------------------------------------------------------------------------
// Learned disturbance set

/// Evaluate both models at the state's (speed, beta), orient the ellipse along
/// the velocity, circumscribe with 8 edges and intersect with W^max. The
/// `intensity` factor scales the learned radii together with the cap, matching
/// a world whose true disturbances are scaled the same way.
inline TemplatePolytope disturbance_set(const FisModel& major, const FisModel& minor,
                                        const Eigen::Vector4d& x, double beta,
                                        const TemplatePolytope& wmax_poly,
                                        double intensity = 1.0) {
  const double speed = std::hypot(x(2), x(3));
  double r_hi = major.eval_conservative(speed, beta);
  double r_lo = minor.eval_conservative(speed, beta);
  if (r_lo > r_hi) std::swap(r_hi, r_lo);
  const double heading = speed < 1e-9 ? 0.0 : std::atan2(x(3), x(2));
  const Ellipse2 e(intensity * r_hi, intensity * r_lo, heading);
  return intersect(circumscribe_ellipse(e, 8), wmax_poly);
}

/// Octagonal cap on the learned sets: worst-case major radius at top speed.
inline TemplatePolytope wmax_octagon(double intensity = 1.0) {
  return circumscribe_ellipse(Ellipse2(intensity * kWmaxRadius, intensity * kWmaxRadius, 0.0), 8);
}

}  // namespace sddtmpc
