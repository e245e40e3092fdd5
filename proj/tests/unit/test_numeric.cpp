// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "moescale/lbfgs.hpp"
#include "moescale/numeric.hpp"

using namespace moescale;

TEST_CASE("logsumexp matches the naive sum where that is representable") {
  const std::vector<double> v{0.1, -2.0, 1.5};
  const double naive = std::log(std::exp(0.1) + std::exp(-2.0) + std::exp(1.5));
  CHECK(numeric::logsumexp(v) == doctest::Approx(naive).epsilon(1e-15));
}

TEST_CASE("logsumexp survives large magnitudes") {
  const std::vector<double> big{1000.0, 1000.0};
  CHECK(numeric::logsumexp(big) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  const std::vector<double> small{-1000.0, -1e308};
  CHECK(numeric::logsumexp(small) == doctest::Approx(-1000.0));
}

TEST_CASE("logsumexp of all -inf terms is -inf") {
  const double ninf = -std::numeric_limits<double>::infinity();
  const std::vector<double> v{ninf, ninf, 0.25};
  CHECK(numeric::logsumexp(v) == 0.25);
  const std::vector<double> w{ninf, ninf};
  CHECK(numeric::logsumexp(w) == ninf);
}

TEST_CASE("bisect finds a bracketed root") {
  const double r = numeric::bisect([](double x) { return x * x * x - 2.0; }, 0.0, 4.0);
  CHECK(r == doctest::Approx(std::cbrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(numeric::bisect([](double x) { return x * x + 1.0; }, -1.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("golden section locates the minimum of a unimodal function") {
  const auto m = numeric::golden_section([](double x) { return (x - 0.3) * (x - 0.3) + 2.0; }, -5.0, 5.0);
  CHECK(m.x == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(m.fx == doctest::Approx(2.0));
}

TEST_CASE("lbfgs minimizes the Rosenbrock function") {
  GradientObjective f = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    if (!g.empty()) {
      g[0] = -2.0 * a - 400.0 * x[0] * b;
      g[1] = 200.0 * b;
    }
    return a * a + 100.0 * b * b;
  };
  LbfgsOptions opt;
  opt.initial_step = 1e-3;
  opt.rel_tolerance = 1e-16;
  const auto r = lbfgs_minimize(f, {-1.2, 1.0}, opt);
  CHECK(r.finite);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("lbfgs stops at a stationary start") {
  GradientObjective f = [](std::span<const double> x, std::span<double> g) {
    if (!g.empty()) g[0] = 2.0 * x[0];
    return x[0] * x[0];
  };
  const auto r = lbfgs_minimize(f, {0.0});
  CHECK(r.converged);
  CHECK(r.value == 0.0);
}
