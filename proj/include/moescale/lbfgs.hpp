// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace moescale {

/// Objective returning f(x) and writing the gradient into `grad`.
using GradientObjective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  int max_iterations = 2000;
  int history_size = 10;
  /// Trial step of the very first iteration (and after a memory reset),
  /// scaled by min(1, 1/|g|_1). Later iterations try the unit quasi-Newton step.
  double initial_step = 1e-4;
  /// Stop when |f_prev - f| <= rel_tolerance * max(|f_prev|, 1e-300).
  double rel_tolerance = 1e-10;
  double gradient_tolerance = 1e-14;
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool finite = true;
};

/// Limited-memory BFGS with two-loop recursion and Armijo backtracking.
LbfgsResult lbfgs_minimize(const GradientObjective& objective, std::vector<double> x0,
                           const LbfgsOptions& options = {});

}  // namespace moescale
