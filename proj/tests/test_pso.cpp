#include <catch2/catch_amalgamated.hpp>

#include "sddtmpc/pso.hpp"

using namespace sddtmpc;

namespace {

SwarmConfig cfg_for(int dim, int iters, std::uint64_t seed, double span = 5.0) {
  SwarmConfig c;
  c.iterations = iters;
  c.seed = seed;
  c.bounds = Box(Vector::Constant(dim, -span), Vector::Constant(dim, span));
  return c;
}

}  // namespace

TEST_CASE("sphere function") {
  const auto obj = [](const Vector& x) { return x.squaredNorm(); };
  const auto rep = pso_minimize(obj, nullptr, cfg_for(8, 200, 1), Vector());
  CHECK(rep.objective <= 1e-4);
  CHECK(rep.feasible);
}

TEST_CASE("rosenbrock 2-D regression") {
  const auto obj = [](const Vector& x) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    return a * a + 100.0 * b * b;
  };
  const auto rep = pso_minimize(obj, nullptr, cfg_for(2, 500, 0), Vector());
  CHECK(rep.objective <= 1e-2);
}

TEST_CASE("matches the QP solver on a penalized convex problem") {
  Eigen::MatrixXd H(3, 3);
  H << 4, 1, 0, 1, 3, 0, 0, 0, 2;
  Eigen::Vector3d f(-1, -2, 0.5);
  QpProblem qp;
  qp.H = H;
  qp.f = f;
  qp.A_in.resize(1, 3);
  qp.A_in << 1, 1, 1;  // x+y+z <= 0.5
  qp.b_in.resize(1);
  qp.b_in << 0.5;
  qp.A_eq.resize(0, 3);
  qp.b_eq.resize(0);
  const auto exact = QpSolver().solve(qp);
  REQUIRE(exact.feasible);

  const auto obj = [&](const Vector& x) { return 0.5 * x.dot(H * x) + f.dot(x); };
  const auto con = [&](const Vector& x) {
    Vector r(1);
    r(0) = x.sum() - 0.5;
    return r;
  };
  auto cfg = cfg_for(3, 400, 3, 2.0);
  cfg.penalty_weight = 1e6;
  const auto rep = pso_minimize(obj, con, cfg, Vector());
  CHECK((rep.solution - exact.solution).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("best objective is monotone non-increasing") {
  const auto obj = [](const Vector& x) { return std::cos(3 * x(0)) + x.squaredNorm(); };
  std::vector<double> trace;
  pso_minimize(obj, nullptr, cfg_for(4, 120, 9), Vector(), &trace);
  REQUIRE(trace.size() == 121);
  for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-15);
}

TEST_CASE("warm start dominance and determinism") {
  const auto obj = [](const Vector& x) { return (x.array() - 0.3).matrix().squaredNorm(); };
  Vector warm = Vector::Constant(5, 0.31);
  const auto cfg = cfg_for(5, 30, 42);
  const auto rep1 = pso_minimize(obj, nullptr, cfg, warm);
  CHECK(rep1.objective <= obj(warm) + 1e-15);
  const auto rep2 = pso_minimize(obj, nullptr, cfg, warm);
  CHECK(rep1.objective == rep2.objective);
  CHECK((rep1.solution - rep2.solution).cwiseAbs().maxCoeff() == 0.0);
}
