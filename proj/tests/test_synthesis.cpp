#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sddtmpc/synthesis.hpp"
#include "sddtmpc/world.hpp"

using namespace sddtmpc;

namespace {

Matrix diag4(double a, double b, double c, double d) {
  return Eigen::Vector4d(a, b, c, d).asDiagonal();
}

}  // namespace

TEST_CASE("dlqr scalar golden-ratio case") {
  // a=b=q=r=1:  P = (1+sqrt(5))/2, |K| = P/(1+P)
  Matrix A(1, 1), B(1, 1), Q(1, 1), R(1, 1);
  A << 1;
  B << 1;
  Q << 1;
  R << 1;
  const Matrix K = dlqr(A, B, Q, R);
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  CHECK(std::abs(K(0, 0)) == Catch::Approx(phi / (1.0 + phi)).epsilon(1e-10));
  CHECK(std::abs(A(0, 0) + B(0, 0) * K(0, 0)) < 1.0);
}

TEST_CASE("dlqr with no actuation on a stable plant") {
  Matrix A(2, 2), B(2, 1), Q(2, 2), R(1, 1);
  A << 0.5, 0.1, 0, 0.8;
  B.setZero();
  Q.setIdentity();
  R << 1;
  CHECK(dlqr(A, B, Q, R).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ancillary gain matches the published magnitudes") {
  const Matrix K = dlqr(holonomic_A(), holonomic_B(), diag4(100, 100, 0.1, 0.1),
                        Matrix::Identity(2, 2));
  Matrix Kmag = K.cwiseAbs();
  Matrix expect(2, 4);
  expect << 7.98, 0, 4.42, 0, 0, 7.98, 0, 4.42;
  CHECK((Kmag - expect).cwiseAbs().maxCoeff() < 0.05);
  CHECK(spectral_radius(holonomic_A() + holonomic_B() * K) < 1.0);
}

TEST_CASE("terminal cost reproduces the published matrix") {
  const Matrix A = holonomic_A(), B = holonomic_B();
  const Matrix kappa = dlqr(A, B, diag4(10, 10, 1, 1), Matrix::Identity(2, 2));
  const Matrix F = terminal_cost(A, B, kappa, diag4(100, 100, 1, 1), Matrix::Identity(2, 2),
                                 LyapOrientation::gramian);
  Matrix expect(4, 4);
  expect << 805, 0, -571, 0, 0, 805, 0, -571, -571, 0, 655, 0, 0, -571, 0, 655;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (expect(i, j) != 0.0)
        CHECK(std::abs(F(i, j) - expect(i, j)) < 0.01 * std::abs(expect(i, j)));
  CHECK((F - F.transpose()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("terminal cost trivial and scalar fixed points") {
  // A+BK = 0  ->  F = Qbar
  Matrix A(2, 2), B(2, 2), Q(2, 2), R(2, 2);
  A << 0.4, 0, 0, 0.7;
  B.setIdentity();
  Q = Matrix::Identity(2, 2) * 3.0;
  R.setIdentity();
  const Matrix K = -A;  // closes the loop to zero
  const Matrix F = terminal_cost(A, B, K, Q, R);
  CHECK((F - (Q + K.transpose() * R * K)).cwiseAbs().maxCoeff() < 1e-9);

  // scalar a_cl = 0.5, qbar = 1: geometric series 1/(1-0.25) = 4/3
  Matrix a(1, 1), b(1, 1), q(1, 1), r(1, 1), k(1, 1);
  a << 0.5;
  b << 1;
  q << 1;
  r << 0;
  k << 0;
  const Matrix f = terminal_cost(a, b, k, q, r);
  CHECK(f(0, 0) == Catch::Approx(4.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("terminal cost reports divergence") {
  Matrix a(1, 1), b(1, 1), q(1, 1), r(1, 1), k(1, 1);
  a << 1.1;
  b << 0;
  q << 1;
  r << 0;
  k << 0;
  CHECK_THROWS_WITH(terminal_cost(a, b, k, q, r), Catch::Matchers::ContainsSubstring("rho"));
}

TEST_CASE("cost-to-go orientation satisfies the terminal decrease identity") {
  // F = Acl'F Acl + Q + K'RK  <=>  Vf(Acl z) - Vf(z) = -l(z, Kz) exactly
  const Matrix A = holonomic_A(), B = holonomic_B();
  const Matrix Q = diag4(100, 100, 1, 1), R = Matrix::Identity(2, 2);
  const Matrix kappa = dlqr(A, B, diag4(10, 10, 1, 1), Matrix::Identity(2, 2));
  const Matrix F = terminal_cost(A, B, kappa, Q, R, LyapOrientation::cost_to_go);
  const Matrix Acl = A + B * kappa;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    Eigen::Vector4d z(u(rng), u(rng), u(rng), u(rng));
    const Eigen::Vector2d v = kappa * z;
    const double decrease = (Acl * z).dot(F * (Acl * z)) - z.dot(F * z);
    const double stage = z.dot(Q * z) + v.dot(R * v);
    CHECK(decrease <= -stage + 1e-6);
  }
}

TEST_CASE("mrpi scalar geometric series") {
  Matrix a(1, 1);
  a << 0.0;
  Matrix n(2, 1);
  n << 1, -1;
  Vector b(2);
  b << 1, 1;
  const TemplatePolytope W(n, b);
  SECTION("a_cl = 0 absorbs in one step") {
    const auto E = mrpi_approx(a, W, n, 0.01);
    CHECK(E.offsets(0) == Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("a_cl = 0.5 sums to 2") {
    a << 0.5;
    const double eps = 0.01;
    const auto E = mrpi_approx(a, W, n, eps);
    CHECK(E.offsets(0) >= 2.0 - 1e-9);
    CHECK(E.offsets(0) <= 2.0 + 2.0 * eps);
    // robust invariance: a*E + W inside E
    const auto AE = linear_map(a, E);
    CHECK(is_subset(minkowski_sum(AE, W), E, 1e-9));
  }
}

TEST_CASE("mrpi of the holonomic error loop is robustly invariant") {
  const Matrix A = holonomic_A(), B = holonomic_B();
  const Matrix K = dlqr(A, B, diag4(100, 100, 0.1, 0.1), Matrix::Identity(2, 2));
  const Matrix Acl = A + B * K;
  // worst-case ellipse at speed 2, beta = 1, embedded on positions
  HolonomicState s;
  s.x << 0, 0, 2, 0;
  const auto W2 = circumscribe_ellipse(true_disturbance_set(s, 1.0), 8);
  const auto W = embed_position_disturbance(W2);
  const Matrix tmpl = reach_closed_template(Acl, box_diag_template4());
  const auto E = mrpi_approx(Acl, W, tmpl, 0.01);
  const auto AE = linear_map(Acl, E);
  CHECK(is_subset(minkowski_sum(AE, W), E, 1e-9));
}

TEST_CASE("max positive invariant set basics") {
  SECTION("a_cl = 0: one-step set") {
    Matrix a(1, 1), kt(1, 1);
    a << 0.0;
    kt << 3.0;
    Matrix n(2, 1);
    n << 1, -1;
    Vector bx(2), bu(2);
    bx << 1, 1;
    bu << 1.5, 1.5;  // |3z| <= 1.5 -> |z| <= 0.5
    const auto Om = max_positive_invariant(a, TemplatePolytope(n, bx),
                                           TemplatePolytope(n, bu), kt);
    CHECK(support(Om, (Vector(1) << 1.0).finished()) == Catch::Approx(0.5).margin(1e-9));
  }
  SECTION("scalar contraction keeps the box") {
    Matrix a(1, 1), kt(1, 1);
    a << 0.5;
    kt << 0.1;
    Matrix n(2, 1);
    n << 1, -1;
    Vector bx(2), bu(2);
    bx << 1, 1;
    bu << 10, 10;
    const auto Om = max_positive_invariant(a, TemplatePolytope(n, bx),
                                           TemplatePolytope(n, bu), kt);
    CHECK(support(Om, (Vector(1) << 1.0).finished()) == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("holonomic terminal set is invariant and admissible") {
  const Matrix A = holonomic_A(), B = holonomic_B();
  const Matrix kappa = dlqr(A, B, diag4(10, 10, 1, 1), Matrix::Identity(2, 2));
  const Matrix Acl = A + B * kappa;
  Box Xb((Vector(4) << -50, -50, -2, -2).finished(), (Vector(4) << 50, 50, 2, 2).finished());
  Box Ub(Eigen::Vector2d(-5, -5), Eigen::Vector2d(5, 5));
  const auto Om = max_positive_invariant(Acl, Xb.to_polytope(), Ub.to_polytope(), kappa);
  REQUIRE(!is_empty(Om));
  CHECK(is_subset(linear_map(Acl, Om, Om.normals), Om, 1e-7));
  CHECK(is_subset(Om, Xb.to_polytope(), 1e-9));
}

TEST_CASE("zoh scalar decay factor") {
  CHECK(zoh_scalar(2.3, 0.2) == Catch::Approx(0.6313).margin(5e-4));
  CHECK(zoh_scalar(0.0, 0.2) == 1.0);
  CHECK(zoh_scalar(1e6, 0.2) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("rk4 step") {
  const auto zero = [](const Vector& x, const Vector&, const Vector&) {
    return Vector::Zero(x.size()).eval();
  };
  Vector x0(1);
  x0 << 2.5;
  const Vector u0 = Vector::Zero(1), w0 = Vector::Zero(1);
  CHECK(rk4_step(zero, x0, u0, w0, 0.2)(0) == 2.5);

  const auto one = [](const Vector& x, const Vector&, const Vector&) {
    return Vector::Ones(x.size()).eval();
  };
  CHECK(rk4_step(one, x0, u0, w0, 0.2)(0) == Catch::Approx(2.7).margin(1e-14));

  const auto decay = [](const Vector& x, const Vector&, const Vector&) {
    return (-x).eval();
  };
  Vector x1(1);
  x1 << 1.0;
  CHECK(rk4_step(decay, x1, u0, w0, 0.1)(0) == Catch::Approx(std::exp(-0.1)).margin(1e-7));
}
