#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sddtmpc/qp.hpp"

using namespace sddtmpc;

namespace {

// projected gradient on box constraints, the independent oracle for random QPs
Eigen::VectorXd projected_gradient_box(const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
                                       const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                       int iters = 1000000) {
  const double L = H.operatorNorm();
  const double step = 1.0 / L;
  Eigen::VectorXd x = 0.5 * (lo + hi);
  for (int k = 0; k < iters; ++k) {
    x = (x - step * (H * x + f)).cwiseMax(lo).cwiseMin(hi);
  }
  return x;
}

}  // namespace

TEST_CASE("unconstrained minimum") {
  QpProblem qp;
  qp.H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  qp.f = Eigen::Vector2d(-2, -4);
  qp.A_in.resize(0, 2);
  qp.b_in.resize(0);
  qp.A_eq.resize(0, 2);
  qp.b_eq.resize(0);
  const auto rep = QpSolver().solve(qp);
  REQUIRE(rep.feasible);
  CHECK(rep.solution(0) == Catch::Approx(1.0).margin(1e-10));
  CHECK(rep.solution(1) == Catch::Approx(2.0).margin(1e-10));
}

TEST_CASE("single active constraint") {
  // min x^2 s.t. x >= 1
  QpProblem qp;
  qp.H = 2.0 * Eigen::MatrixXd::Identity(1, 1);
  qp.f = Eigen::VectorXd::Zero(1);
  qp.A_in.resize(1, 1);
  qp.A_in << -1;
  qp.b_in.resize(1);
  qp.b_in << -1;
  qp.A_eq.resize(0, 1);
  qp.b_eq.resize(0);
  const auto rep = QpSolver().solve(qp);
  REQUIRE(rep.feasible);
  CHECK(rep.solution(0) == Catch::Approx(1.0).margin(1e-9));
  CHECK(rep.objective == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("equality constraint") {
  // min (x-1)^2+(y-1)^2 s.t. x + y = 1
  QpProblem qp;
  qp.H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  qp.f = Eigen::Vector2d(-2, -2);
  qp.A_in.resize(0, 2);
  qp.b_in.resize(0);
  qp.A_eq.resize(1, 2);
  qp.A_eq << 1, 1;
  qp.b_eq.resize(1);
  qp.b_eq << 1;
  const auto rep = QpSolver().solve(qp);
  REQUIRE(rep.feasible);
  CHECK(rep.solution(0) == Catch::Approx(0.5).margin(1e-9));
  CHECK(rep.solution(1) == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("infeasible constraints are reported, not thrown") {
  // x >= 1 and x <= 0
  QpProblem qp;
  qp.H = 2.0 * Eigen::MatrixXd::Identity(1, 1);
  qp.f = Eigen::VectorXd::Zero(1);
  qp.A_in.resize(2, 1);
  qp.A_in << -1, 1;
  qp.b_in.resize(2);
  qp.b_in << -1, 0;
  qp.A_eq.resize(0, 1);
  qp.b_eq.resize(0);
  const auto rep = QpSolver().solve(qp);
  CHECK(!rep.feasible);
  CHECK(rep.constraint_violation > 0.1);
}

TEST_CASE("random box-constrained QPs match the projected-gradient oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 6;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = u(rng);
    Eigen::MatrixXd H = M.transpose() * M + 0.5 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd f(n), lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      f(i) = 2.0 * u(rng);
      lo(i) = -0.5 + 0.3 * u(rng);
      hi(i) = 0.5 + 0.3 * u(rng);
    }
    QpProblem qp;
    qp.H = H;
    qp.f = f;
    qp.A_in.resize(2 * n, n);
    qp.b_in.resize(2 * n);
    qp.A_in << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
    qp.b_in << hi, -lo;
    qp.A_eq.resize(0, n);
    qp.b_eq.resize(0);
    const auto rep = QpSolver().solve(qp);
    REQUIRE(rep.feasible);
    const Eigen::VectorXd xo = projected_gradient_box(H, f, lo, hi, 200000);
    CHECK((rep.solution - xo).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("KKT: complementary slackness on random instances") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 5;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = u(rng);
    QpProblem qp;
    qp.H = M.transpose() * M + Eigen::MatrixXd::Identity(n, n);
    qp.f = Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); });
    qp.A_in.resize(2 * n, n);
    qp.A_in << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
    qp.b_in = Eigen::VectorXd::Constant(2 * n, 0.4);
    qp.A_eq.resize(0, n);
    qp.b_eq.resize(0);
    const auto rep = QpSolver().solve(qp);
    REQUIRE(rep.feasible);
    // stationarity residual projected on inactive coordinates must vanish;
    // reconstruct multipliers from the gradient
    const Eigen::VectorXd g = qp.H * rep.solution + qp.f;
    for (int i = 0; i < n; ++i) {
      const bool at_hi = std::abs(rep.solution(i) - 0.4) < 1e-8;
      const bool at_lo = std::abs(rep.solution(i) + 0.4) < 1e-8;
      if (!at_hi && !at_lo) {
        CHECK(std::abs(g(i)) < 1e-6);  // interior: gradient zero
      } else if (at_hi) {
        CHECK(g(i) <= 1e-8);  // pushing outward
      } else {
        CHECK(g(i) >= -1e-8);
      }
    }
  }
}
