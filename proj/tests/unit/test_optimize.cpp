#include <doctest.h>

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "bisurv/errors.hpp"
#include "bisurv/optimize.hpp"

using namespace bisurv;

namespace {

Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-6 * (1.0 + std::abs(x[k]));
    Eigen::VectorXd hi = x, lo = x;
    hi[k] += h;
    lo[k] -= h;
    g[k] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_SUITE("optimize") {
  TEST_CASE("concave quadratic reaches its maximizer") {
    Eigen::MatrixXd a(3, 3);
    a << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
    Eigen::VectorXd b(3);
    b << 1, -2, 0.5;
    const Eigen::VectorXd target = a.ldlt().solve(b);
    const auto f = [&](const Eigen::VectorXd& x) { return b.dot(x) - 0.5 * x.dot(a * x); };
    const auto g = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(b - a * x); };
    const OptimizerResult res = maximize_bfgs(f, g, Eigen::VectorXd::Zero(3));
    CHECK(res.converged);
    CHECK((res.x - target).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(res.value == doctest::Approx(0.5 * b.dot(target)));
    CHECK(res.iterations < 50);
  }

  TEST_CASE("curved valley with finite-difference gradients") {
    const Objective f = [](const Eigen::VectorXd& x) {
      return -(std::pow(1.0 - x[0], 2) + 10.0 * std::pow(x[1] - x[0] * x[0], 2));
    };
    const Gradient g = [&](const Eigen::VectorXd& x) { return central_gradient(f, x); };
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    const OptimizerResult res = maximize_bfgs(f, g, x0);
    CHECK(res.converged);
    CHECK(std::abs(res.x[0] - 1.0) < 1e-4);
    CHECK(std::abs(res.x[1] - 1.0) < 1e-4);
  }

  TEST_CASE("non-finite trial values are rejected by the line search") {
    // log-barrier objective undefined for x <= 0 with maximizer at x = 1.
    const Objective f = [](const Eigen::VectorXd& x) {
      return x[0] > 0.0 ? std::log(x[0]) - x[0] : std::numeric_limits<double>::quiet_NaN();
    };
    const Gradient g = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, 1.0 / x[0] - 1.0); };
    const OptimizerResult res = maximize_bfgs(f, g, Eigen::VectorXd::Constant(1, 0.05));
    CHECK(res.converged);
    CHECK(std::abs(res.x[0] - 1.0) < 1e-5);
  }

  TEST_CASE("iteration cap reports non-convergence") {
    const Objective f = [](const Eigen::VectorXd& x) { return x[0]; };
    const Gradient g = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); };
    OptimizerOptions opts;
    opts.max_iterations = 7;
    const OptimizerResult res = maximize_bfgs(f, g, Eigen::VectorXd::Zero(1), opts);
    CHECK_FALSE(res.converged);
    CHECK(res.iterations == 7);
    CHECK(res.message == "iteration limit reached");
    CHECK(res.x[0] > 0.0);
  }

  TEST_CASE("step length is capped") {
    const Objective f = [](const Eigen::VectorXd& x) { return -0.5 * 1e-6 * x.squaredNorm() + x.sum(); };
    const Gradient g = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(Eigen::VectorXd::Ones(2) - 1e-6 * x); };
    OptimizerOptions opts;
    opts.max_iterations = 1;
    opts.max_step = 0.25;
    const OptimizerResult res = maximize_bfgs(f, g, Eigen::VectorXd::Zero(2), opts);
    CHECK(res.x.cwiseAbs().maxCoeff() <= 0.25 + 1e-15);
  }

  TEST_CASE("starting point must be finite") {
    const Objective f = [](const Eigen::VectorXd&) { return std::numeric_limits<double>::infinity(); };
    const Gradient g = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1); };
    CHECK_THROWS_AS(maximize_bfgs(f, g, Eigen::VectorXd::Zero(1)), NumericalError);
    const Objective ok = [](const Eigen::VectorXd&) { return 0.0; };
    const Gradient bad = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, NAN); };
    CHECK_THROWS_AS(maximize_bfgs(ok, bad, Eigen::VectorXd::Zero(1)), NumericalError);
  }

  TEST_CASE("already stationary start") {
    const Objective f = [](const Eigen::VectorXd& x) { return -x.squaredNorm(); };
    const Gradient g = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-2.0 * x); };
    const OptimizerResult res = maximize_bfgs(f, g, Eigen::VectorXd::Zero(4));
    CHECK(res.converged);
    CHECK(res.x.isZero(0.0));
  }
}
