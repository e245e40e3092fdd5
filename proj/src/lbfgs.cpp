// SPDX-License-Identifier: Apache-2.0
#include "moescale/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace moescale {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct CurvaturePair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

}  // namespace

LbfgsResult lbfgs_minimize(const GradientObjective& objective, std::vector<double> x0,
                           const LbfgsOptions& options) {
  const std::size_t n = x0.size();
  LbfgsResult result;
  result.x = std::move(x0);

  std::vector<double> grad(n);
  double fx = objective(result.x, grad);
  result.value = fx;
  if (!std::isfinite(fx) || !all_finite(grad)) {
    result.finite = false;
    return result;
  }

  std::deque<CurvaturePair> history;
  std::vector<double> direction(n);
  std::vector<double> alpha(static_cast<std::size_t>(options.history_size));
  std::vector<double> trial(n);
  std::vector<double> trial_grad(n);
  bool fresh = true;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    if (std::sqrt(dot(grad, grad)) <= options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    // Two-loop recursion: direction = -H * grad.
    for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
    for (std::size_t k = history.size(); k-- > 0;) {
      alpha[k] = history[k].rho * dot(history[k].s, direction);
      for (std::size_t i = 0; i < n; ++i) direction[i] -= alpha[k] * history[k].y[i];
    }
    if (!history.empty()) {
      const auto& last = history.back();
      const double scale = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& d : direction) d *= scale;
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const double beta = history[k].rho * dot(history[k].y, direction);
      for (std::size_t i = 0; i < n; ++i) direction[i] += (alpha[k] - beta) * history[k].s[i];
    }

    double slope = dot(grad, direction);
    if (!(slope < 0.0)) {
      history.clear();
      for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
      slope = -dot(grad, grad);
      fresh = true;
    }

    double step = 1.0;
    if (fresh) {
      double g1 = 0.0;
      for (double g : grad) g1 += std::abs(g);
      step = std::min(1.0, 1.0 / g1) * options.initial_step;
    }

    double f_trial = fx;
    bool accepted = false;
    for (int bt = 0; bt <= options.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = result.x[i] + step * direction[i];
      f_trial = objective(trial, trial_grad);
      if (std::isfinite(f_trial) && all_finite(trial_grad) &&
          f_trial <= fx + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No decrease along a descent direction: at the precision floor.
      result.converged = true;
      break;
    }

    CurvaturePair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = trial[i] - result.x[i];
      pair.y[i] = trial_grad[i] - grad[i];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 1e-16 * std::sqrt(dot(pair.s, pair.s) * dot(pair.y, pair.y))) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (static_cast<int>(history.size()) > options.history_size) history.pop_front();
    }

    const double f_prev = fx;
    result.x.swap(trial);
    grad.swap(trial_grad);
    fx = f_trial;
    result.value = fx;

    const bool was_fresh = fresh;
    fresh = false;
    if (!was_fresh &&
        std::abs(f_prev - fx) <= options.rel_tolerance * std::max(std::abs(f_prev), 1e-300)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace moescale
