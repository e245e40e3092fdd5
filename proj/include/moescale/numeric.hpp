// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <span>

namespace moescale::numeric {

/// Stable log(sum(exp(x))). Returns -inf for an empty or all -inf input.
double logsumexp(std::span<const double> values) noexcept;

/// Root of a monotone function on [lo, hi]; requires f(lo) and f(hi) of
/// opposite sign (or zero). Stops once the bracket width falls below
/// rel_tol * |mid|.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double rel_tol = 1e-12, int max_iterations = 400);

struct ScalarMinimum {
  double x;
  double fx;
};

/// Golden-section search for a unimodal function on [lo, hi].
ScalarMinimum golden_section(const std::function<double(double)>& f, double lo, double hi,
                             double rel_tol = 1e-9, int max_iterations = 400);

}  // namespace moescale::numeric
