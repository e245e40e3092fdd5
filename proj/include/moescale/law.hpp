// SPDX-License-Identifier: Apache-2.0
//
// Joint dense/MoE loss law
//
//   L(N, D, E) = a * Ê^δ * N^(α + γ ln Ê) + b * Ê^ω * D^(β + ζ ln Ê) + c
//
// where Ê is a saturating transform of the expert count bounded by
// [e_start, e_max). For a fixed E the law collapses to the Chinchilla form
// m * N^μ + n * D^ν + c. All logarithms are natural.
#pragma once

#include <string>

namespace moescale {

struct ScalingCoefficients {
  double a = 35.91;
  double alpha = -0.1889;
  double delta = -0.2285;
  double gamma = 0.0098;
  double b = 35.98;
  double beta = -0.1775;
  double omega = 0.5529;
  double zeta = -0.0259;
  double e_start = 2.0732;
  double e_max = 290.4521;
  double c = 1.3637;

  /// Throws Error(InvalidCoefficients) unless a, b, c > 0 and 0 < e_start < e_max.
  void validate() const;

  friend bool operator==(const ScalingCoefficients&, const ScalingCoefficients&) = default;
};

/// The published joint fit.
ScalingCoefficients default_coefficients();

struct ChinchillaCoefficients {
  double m = 0.0;
  double mu = 0.0;
  double n = 0.0;
  double nu = 0.0;
  double c = 0.0;
};

struct LrRule {
  double intercept = 8.39;
  double n_slope = -0.81;
  double e_slope = -0.25;
};

double e_hat(double experts, const ScalingCoefficients& coeffs);

/// Evaluated through logsumexp of the three log-terms.
double loss(double n_act, double tokens, double experts, const ScalingCoefficients& coeffs);

ChinchillaCoefficients reduce_to_chinchilla(const ScalingCoefficients& coeffs, double experts);

double chinchilla_loss(double n_act, double tokens, const ChinchillaCoefficients& coeffs);

double peak_learning_rate(double n_act_nonemb, double experts, const LrRule& rule = {});

// Flat JSON object keyed by the eleven field names.
std::string coefficients_to_json(const ScalingCoefficients& coeffs);
ScalingCoefficients coefficients_from_json(const std::string& text);

}  // namespace moescale
