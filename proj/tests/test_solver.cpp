#include <doctest.h>

#include <cmath>

#include "mnar/links.hpp"
#include "mnar/solver.hpp"

using namespace mnar;

TEST_CASE("affine system solves in one Newton step") {
  VectorFn F = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(2);
    out << x(0) - 3.0, x(1) + 1.5;
    return out;
  };
  const SolveResult res = solve_nonlinear_system(F, Eigen::VectorXd::Zero(2));
  CHECK(res.converged);
  CHECK(res.iterations <= 2);
  CHECK(res.x(0) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(res.x(1) == doctest::Approx(-1.5).epsilon(1e-9));
}

TEST_CASE("nonlinear 2d system") {
  VectorFn F = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(2);
    out << x(0) * x(0) + x(1) * x(1) - 4.0, x(0) - x(1);
    return out;
  };
  Eigen::VectorXd x0(2);
  x0 << 1.0, 0.5;
  const SolveResult res = solve_nonlinear_system(F, x0);
  CHECK(res.converged);
  CHECK(res.x(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-8));
  CHECK(res.x(1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-8));
}

TEST_CASE("1d logistic score root matches a grid-search NLL minimizer") {
  // small fixed sample, no separation
  const double x[8] = {-1.2, -0.7, -0.3, 0.1, 0.4, 0.9, 1.3, 2.0};
  const double y[8] = {0, 1, 0, 0, 1, 1, 0, 1};
  const LinkFunction link = LinkFunction::logistic();

  auto nll = [&](double b) {
    double acc = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double p = link.cdf(b * x[i]);
      acc -= y[i] > 0.5 ? std::log(p) : std::log(1.0 - p);
    }
    return acc;
  };
  // brute force: coarse grid then zoomed fine grid at 1e-6 resolution
  double best_b = 0.0, best_v = 1e300;
  for (double b = -5.0; b <= 5.0; b += 1e-3) {
    const double v = nll(b);
    if (v < best_v) {
      best_v = v;
      best_b = b;
    }
  }
  for (double b = best_b - 2e-3; b <= best_b + 2e-3; b += 1e-6) {
    const double v = nll(b);
    if (v < best_v) {
      best_v = v;
      best_b = b;
    }
  }

  VectorFn score = [&](const Eigen::VectorXd& bv) {
    double acc = 0.0;
    for (int i = 0; i < 8; ++i)
      acc += (y[i] - link.cdf(bv(0) * x[i])) * x[i];
    Eigen::VectorXd out(1);
    out << acc;
    return out;
  };
  const SolveResult res =
      solve_nonlinear_system(score, Eigen::VectorXd::Zero(1));
  CHECK(res.converged);
  CHECK(std::abs(res.x(0) - best_b) < 1e-6);
}

TEST_CASE("solver is deterministic given the same inputs") {
  VectorFn F = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(1);
    out << std::tanh(x(0)) - 0.3;
    return out;
  };
  Eigen::VectorXd x0(1);
  x0 << 2.0;
  const SolveResult a = solve_nonlinear_system(F, x0);
  const SolveResult b = solve_nonlinear_system(F, x0);
  CHECK(a.converged);
  CHECK(a.x(0) == b.x(0));
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("reports non-convergence with the final residual") {
  // F has no root: F(x) = x^2 + 1
  VectorFn F = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(1);
    out << x(0) * x(0) + 1.0;
    return out;
  };
  SolveOptions opts;
  opts.max_iter = 40;
  const SolveResult res =
      solve_nonlinear_system(F, Eigen::VectorXd::Zero(1), opts);
  CHECK(!res.converged);
  CHECK(res.residual_inf >= 1.0 - 1e-9);
  CHECK(!res.message.empty());
}
