#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sddtmpc/world.hpp"

using namespace sddtmpc;

TEST_CASE("holonomic step hand values") {
  HolonomicState s;
  s.x << 0, 0, 1, 0;
  auto n = holonomic_step(s, {1, 0}, {0, 0});
  CHECK(n.x(0) == Catch::Approx(0.1));
  CHECK(n.x(1) == 0.0);
  CHECK(n.x(2) == Catch::Approx(1.1));
  CHECK(n.x(3) == 0.0);

  s.x.setZero();
  n = holonomic_step(s, {0, 0}, {0.05, 0});
  CHECK(n.x(0) == Catch::Approx(0.05));
  CHECK(n.x.tail<3>().cwiseAbs().maxCoeff() == 0.0);

  n = holonomic_step(HolonomicState{}, {0, 0}, {0, 0});
  CHECK(n.x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("holonomic step is linear") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    HolonomicState a, b;
    for (int i = 0; i < 4; ++i) {
      a.x(i) = u(rng);
      b.x(i) = u(rng);
    }
    const Eigen::Vector2d u1(u(rng), u(rng)), u2(u(rng), u(rng));
    const Eigen::Vector2d w1(u(rng), u(rng)), w2(u(rng), u(rng));
    HolonomicState ab;
    ab.x = a.x + b.x;
    const auto lhs = holonomic_step(ab, u1 + u2, w1 + w2);
    const auto rhs = holonomic_step(a, u1, w1).x + holonomic_step(b, u2, w2).x -
                     holonomic_step(HolonomicState{}, {0, 0}, {0, 0}).x;
    CHECK((lhs.x - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("true disturbance ellipse law") {
  HolonomicState s;
  CHECK(true_disturbance_set(s, 1.0).r_max == 0.0);
  s.x << 0, 0, 1, 0;
  auto e = true_disturbance_set(s, 1.0);
  CHECK(e.r_max == Catch::Approx(0.427));
  CHECK(e.r_min == Catch::Approx(0.225));
  e = true_disturbance_set(s, 0.5);
  CHECK(e.r_min == Catch::Approx(0.05625));
  CHECK(e.r_max == Catch::Approx(0.25825));
  // intensity scales both radii
  e = true_disturbance_set(s, 1.0, 0.13);
  CHECK(e.r_max == Catch::Approx(0.13 * 0.427));
}

TEST_CASE("beta fields") {
  HolonomicState s;
  s.x << 5, 0, 0, 0;
  CHECK(BetaField::corridor()(s) == 1.0);
  s.x << 2, 0, 0, 0;
  CHECK(BetaField::corridor()(s) == Catch::Approx(0.25));
  CHECK(BetaField::constant()(s) == 1.0);
  const auto tz = BetaField::two_zone(3.025, 0.4);
  s.x << 0, 3.5, 0, 0;
  CHECK(tz(s) == 1.0);
  s.x << 0, 2.5, 0, 0;
  CHECK(tz(s) == 0.4);
}

TEST_CASE("sampled disturbances stay inside the true set") {
  std::mt19937_64 rng(77);
  HolonomicState s;
  s.x << 1, 2, 1.3, -0.4;
  const auto e = true_disturbance_set(s, 0.8);
  const auto hull = circumscribe_ellipse(e, 8);
  const std::vector<DisturbanceMode> modes = {
      DisturbanceMode::none(), DisturbanceMode::attract({5, 5}), DisturbanceMode::repel({5, 5}),
      DisturbanceMode::push_up(), DisturbanceMode::push_down(),
      DisturbanceMode::uniform_random()};
  for (const auto& mode : modes) {
    for (int k = 0; k < 20000; ++k) {
      const Eigen::Vector2d w = sample_disturbance(e, mode, s.x.head<2>(), rng);
      REQUIRE(hull.contains(w, 1e-9));
    }
  }
  // degenerate set: always zero
  const Ellipse2 z(0, 0, 0);
  CHECK(sample_disturbance(z, DisturbanceMode::push_up(), {0, 0}, rng).norm() == 0.0);
  CHECK(sample_disturbance(e, DisturbanceMode::none(), {0, 0}, rng).norm() == 0.0);
}

TEST_CASE("push modes point the right way") {
  std::mt19937_64 rng(3);
  HolonomicState s;
  s.x << 0, 0, 1, 0;
  const auto e = true_disturbance_set(s, 1.0);
  for (int k = 0; k < 100; ++k) {
    CHECK(sample_disturbance(e, DisturbanceMode::push_down(), {0, 0}, rng).y() < 0.0);
    CHECK(sample_disturbance(e, DisturbanceMode::push_up(), {0, 0}, rng).y() > 0.0);
    const auto wa = sample_disturbance(e, DisturbanceMode::attract({3, 0}), {0, 0}, rng);
    CHECK(wa.x() > 0.0);
  }
}

TEST_CASE("unicycle derivatives") {
  Eigen::Vector3d x(0, 0, 0);
  auto d = unicycle_derivative(x, {1, 0}, {0, 0}, 0.0267);
  CHECK(d(0) == Catch::Approx(1.0));
  CHECK(d(1) == 0.0);
  CHECK(d(2) == 0.0);
  d = unicycle_derivative(x, {0, 1}, {0, 0}, 0.0267);
  CHECK(d(0) == Catch::Approx(0.0).margin(1e-12));
  CHECK(d(1) == Catch::Approx(0.0267));
  CHECK(d(2) == 1.0);
  d = unicycle_derivative(x, {0, 0}, {0.004, 0}, 0.0267);
  CHECK(d(0) == Catch::Approx(0.004));

  Eigen::Vector3d xl(0, 0, 0);
  auto dl = leader_derivative(xl, 0.015, 0.04);
  CHECK(dl(0) == Catch::Approx(0.015));
  CHECK(dl(1) == 0.0);
  CHECK(dl(2) == Catch::Approx(0.04));
  CHECK(leader_derivative(xl, 0.0, 0.0).norm() == 0.0);
  xl << 0, 0, M_PI / 2;
  dl = leader_derivative(xl, 0.015, 0.04);
  CHECK(dl(0) == Catch::Approx(0.0).margin(1e-12));
  CHECK(dl(1) == Catch::Approx(0.015));
}

TEST_CASE("adaptive integrator") {
  SECTION("zero field") {
    Vector x0(2);
    x0 << 1.5, -0.5;
    const auto xf = integrate_adaptive([](const Vector& x) { return (0.0 * x).eval(); }, x0, 1.0);
    CHECK((xf - x0).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("exponential decay") {
    Vector x0(1);
    x0 << 1.0;
    const auto xf =
        integrate_adaptive([](const Vector& x) { return (-x).eval(); }, x0, 1.0, 1e-8, 1e-12);
    CHECK(xf(0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-8));
  }
  SECTION("full rotation returns to start") {
    Vector x0(2);
    x0 << 1.0, 0.0;
    const auto field = [](const Vector& x) {
      Vector d(2);
      d << -x(1), x(0);
      return d;
    };
    const auto xf = integrate_adaptive(field, x0, 2.0 * M_PI, 1e-10, 1e-12);
    CHECK((xf - x0).cwiseAbs().maxCoeff() < 1e-6);
  }
  SECTION("unicycle with no disturbance moves nu*t along heading") {
    const double rho = 0.0267, nu = 0.1, T = 2.0;
    Vector x0(3);
    x0 << 0.2, -0.1, 0.7;
    const auto field = [&](const Vector& x) {
      return Vector(unicycle_derivative(x.head<3>(), {nu, 0.0}, {0, 0}, rho));
    };
    const auto xf = integrate_adaptive(field, x0, T, 1e-10, 1e-12);
    CHECK(xf(0) == Catch::Approx(0.2 + nu * T * std::cos(0.7)).margin(1e-8));
    CHECK(xf(1) == Catch::Approx(-0.1 + nu * T * std::sin(0.7)).margin(1e-8));
    CHECK(xf(2) == Catch::Approx(0.7));
  }
}
