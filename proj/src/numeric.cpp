// SPDX-License-Identifier: Apache-2.0
#include "moescale/numeric.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace moescale::numeric {

double logsumexp(std::span<const double> values) noexcept {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double rel_tol,
              int max_iterations) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw std::invalid_argument("bisect: endpoints do not bracket a root");
  }
  for (int i = 0; i < max_iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= rel_tol * std::abs(mid)) break;
    const double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ScalarMinimum golden_section(const std::function<double(double)>& f, double lo, double hi,
                             double rel_tol, int max_iterations) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iterations; ++i) {
    if (hi - lo <= rel_tol * std::max(1.0, std::abs(c) + std::abs(d))) break;
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  return fc < fd ? ScalarMinimum{c, fc} : ScalarMinimum{d, fd};
}

}  // namespace moescale::numeric
