// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "moescale/error.hpp"
#include "moescale/law.hpp"

using namespace moescale;

namespace {

struct Row {
  double e, m, mu, n, nu;
};

// Published per-E reduction of the joint fit (c = 1.3637 on every row).
constexpr std::array<Row, 6> kPerExpert{{
    {1, 30.363993648167263, -0.18173956204827252, 53.98384414155987, -0.19650191228646036},
    {2, 27.79821195271775, -0.17795397781692185, 66.84011296802187, -0.20648914813917155},
    {4, 24.846202931338134, -0.17314011944591995, 87.70219698814259, -0.21918920603633535},
    {8, 21.832989774298056, -0.1675966335114486, 119.91258457347162, -0.23381418809729415},
    {16, 19.015896366339852, -0.16167306968397718, 167.50725788774776, -0.24944190245208414},
    {32, 16.54244596529427, -0.1556980993088928, 234.67256254388218, -0.2652052390210445},
}};

double table_loss(const Row& r, double n, double d) {
  return r.m * std::pow(n, r.mu) + r.n * std::pow(d, r.nu) + 1.3637;
}

}  // namespace

TEST_CASE("e_hat is anchored at e_start and saturates at e_max") {
  const auto k = default_coefficients();
  CHECK(e_hat(1.0, k) == k.e_start);
  CHECK(e_hat(1e12, k) == doctest::Approx(k.e_max).epsilon(1e-6));
  // 1/Ê = 1/(7 + 1/(1/2.0732 - 1/290.4521)) + 1/290.4521, worked by hand.
  const double inner = 1.0 / (1.0 / 2.0732 - 1.0 / 290.4521);
  const double expected = 1.0 / (1.0 / (7.0 + inner) + 1.0 / 290.4521);
  CHECK(e_hat(8.0, k) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(e_hat(8.0, k) == doctest::Approx(8.81237).epsilon(1e-5));
}

TEST_CASE("e_hat is strictly increasing") {
  const auto k = default_coefficients();
  double prev = e_hat(1.0, k);
  for (int e = 2; e <= 1024; ++e) {
    const double cur = e_hat(e, k);
    CHECK(cur > prev);
    CHECK(cur < k.e_max);
    prev = cur;
  }
}

TEST_CASE("e_hat rejects bad inputs") {
  auto k = default_coefficients();
  CHECK_THROWS_AS(e_hat(0.5, k), std::invalid_argument);
  k.e_start = 300.0;
  try {
    e_hat(2.0, k);
    FAIL("expected InvalidCoefficients");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidCoefficients);
  }
}

TEST_CASE("reduction reproduces the published per-E table") {
  const auto k = default_coefficients();
  for (const auto& row : kPerExpert) {
    CAPTURE(row.e);
    const auto r = reduce_to_chinchilla(k, row.e);
    CHECK(std::abs(r.m / row.m - 1.0) <= 0.01);
    CHECK(std::abs(r.n / row.n - 1.0) <= 0.01);
    CHECK(std::abs(r.mu - row.mu) <= 5e-4);
    CHECK(std::abs(r.nu - row.nu) <= 5e-4);
    CHECK(r.c == 1.3637);
  }
}

TEST_CASE("natural logs make the E=1 exponent agree with the table") {
  const auto k = default_coefficients();
  CHECK(std::abs(k.alpha + k.gamma * std::log(k.e_start) - kPerExpert[0].mu) < 1e-4);
  CHECK(std::abs(k.alpha + k.gamma * std::log10(k.e_start) - kPerExpert[0].mu) > 1e-3);
}

TEST_CASE("loss agrees with the tabulated per-E laws") {
  const auto k = default_coefficients();
  CHECK(loss(1.1e9, 1.6e10, 1, k) == doctest::Approx(table_loss(kPerExpert[0], 1.1e9, 1.6e10)).epsilon(1e-3));
  CHECK(loss(1.1e9, 8e9, 1, k) == doctest::Approx(table_loss(kPerExpert[0], 1.1e9, 8e9)).epsilon(1e-3));
  CHECK(loss(4.26e8, 3.2e10, 4, k) == doctest::Approx(table_loss(kPerExpert[2], 4.26e8, 3.2e10)).epsilon(1e-3));
  // Regression values from the joint coefficients.
  CHECK(loss(1.1e9, 8e9, 1, k) == doctest::Approx(2.66621).epsilon(1e-5));
  CHECK(loss(1.1e9, 1.6e10, 1, k) == doctest::Approx(2.58840).epsilon(1e-5));
  CHECK(loss(4.26e8, 3.2e10, 4, k) == doctest::Approx(2.59727).epsilon(1e-5));
}

TEST_CASE("loss at unit inputs is the sum of the prefactors") {
  const auto k = default_coefficients();
  const double eh = e_hat(1.0, k);
  const double expected = k.a * std::pow(eh, k.delta) + k.b * std::pow(eh, k.omega) + k.c;
  CHECK(loss(1.0, 1.0, 1.0, k) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("loss decreases in N and D and approaches c") {
  const auto k = default_coefficients();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ln_n(std::log(1e7), std::log(1e11)), ln_d(std::log(1e8), std::log(1e12));
  std::uniform_int_distribution<int> pe(0, 5);
  for (int i = 0; i < 300; ++i) {
    const double n = std::exp(ln_n(rng)), d = std::exp(ln_d(rng));
    const double e = static_cast<double>(1 << pe(rng));
    const double l = loss(n, d, e, k);
    CHECK(loss(n * 1.01, d, e, k) < l);
    CHECK(loss(n, d * 1.01, e, k) < l);
    CHECK(l > k.c);
  }
  // N^-0.17 decays slowly: at 1e30 the parameter term is still ~2e-4.
  CHECK(loss(1e60, 1e60, 8, k) - k.c < 1e-6);
  CHECK(loss(1e60, 1e60, 8, k) > k.c);
}

TEST_CASE("joint and reduced forms agree") {
  const auto k = default_coefficients();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ln_n(std::log(1e6), std::log(1e12)), ln_d(std::log(1e7), std::log(1e13));
  std::uniform_real_distribution<double> ln_e(0.0, std::log(64.0));
  for (int i = 0; i < 1000; ++i) {
    const double n = std::exp(ln_n(rng)), d = std::exp(ln_d(rng)), e = std::exp(ln_e(rng));
    const double joint = loss(n, d, e, k);
    const double reduced = chinchilla_loss(n, d, reduce_to_chinchilla(k, e));
    CHECK(std::abs(joint / reduced - 1.0) <= 1e-12);
  }
}

TEST_CASE("invalid coefficients are rejected") {
  auto k = default_coefficients();
  k.c = -1.0;
  CHECK_THROWS_AS(loss(1e9, 1e10, 1, k), Error);
  k = default_coefficients();
  k.e_max = k.e_start;
  CHECK_THROWS_AS(k.validate(), Error);
}

TEST_CASE("peak learning rate") {
  CHECK(peak_learning_rate(1e8, 1) == doctest::Approx(std::exp(8.39 - 0.81 * std::log(1e8))).epsilon(1e-14));
  CHECK(peak_learning_rate(1e8, 1) == doctest::Approx(1.45791e-3).epsilon(1e-5));
  CHECK(peak_learning_rate(1e8, 8) == doctest::Approx(8.66878e-4).epsilon(1e-5));
  CHECK(peak_learning_rate(1e8, 8) / peak_learning_rate(1e8, 1) == doctest::Approx(std::pow(8.0, -0.25)));
  CHECK(peak_learning_rate(2e8, 4) < peak_learning_rate(1e8, 4));
  CHECK(peak_learning_rate(1e8, 16) < peak_learning_rate(1e8, 4));
}

TEST_CASE("coefficient JSON round trip") {
  ScalingCoefficients k = default_coefficients();
  k.alpha = -0.123456789012345678;
  CHECK(coefficients_from_json(coefficients_to_json(k)) == k);
}

TEST_CASE("bundled coefficient file holds the defaults") {
  std::ifstream in(MOESCALE_SOURCE_DIR "/data/default_coefficients.json");
  REQUIRE(in);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(coefficients_from_json(buf.str()) == default_coefficients());
}

TEST_CASE("coefficient JSON errors") {
  try {
    coefficients_from_json("{");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
  }
  try {
    coefficients_from_json(R"({"a": 1})");
    FAIL("expected ValidationError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ValidationError);
  }
}
