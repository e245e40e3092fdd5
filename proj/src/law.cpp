// SPDX-License-Identifier: Apache-2.0
#include "moescale/law.hpp"

#include <array>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "moescale/error.hpp"
#include "moescale/numeric.hpp"

namespace moescale {

void ScalingCoefficients::validate() const {
  const std::array<double, 11> all{a, alpha, delta, gamma, b, beta, omega, zeta, e_start, e_max, c};
  for (double v : all) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidCoefficients, "non-finite coefficient");
  }
  if (a <= 0.0 || b <= 0.0 || c <= 0.0) {
    throw Error(ErrorKind::InvalidCoefficients, "a, b and c must be positive");
  }
  if (e_start <= 0.0 || e_start >= e_max) {
    throw Error(ErrorKind::InvalidCoefficients, "need 0 < e_start < e_max");
  }
}

ScalingCoefficients default_coefficients() { return ScalingCoefficients{}; }

double e_hat(double experts, const ScalingCoefficients& coeffs) {
  if (!(coeffs.e_start < coeffs.e_max) || coeffs.e_start <= 0.0) {
    throw Error(ErrorKind::InvalidCoefficients, "need 0 < e_start < e_max");
  }
  if (!(experts >= 1.0)) throw std::invalid_argument("experts must be >= 1");
  // The transform is anchored at E = 1; return the anchor without rounding.
  if (experts == 1.0) return coeffs.e_start;
  const double offset = 1.0 / (1.0 / coeffs.e_start - 1.0 / coeffs.e_max);
  return 1.0 / (1.0 / (experts - 1.0 + offset) + 1.0 / coeffs.e_max);
}

double loss(double n_act, double tokens, double experts, const ScalingCoefficients& coeffs) {
  coeffs.validate();
  const double log_e = std::log(e_hat(experts, coeffs));
  const std::array<double, 3> terms{
      std::log(coeffs.a) + coeffs.delta * log_e + (coeffs.alpha + coeffs.gamma * log_e) * std::log(n_act),
      std::log(coeffs.b) + coeffs.omega * log_e + (coeffs.beta + coeffs.zeta * log_e) * std::log(tokens),
      std::log(coeffs.c),
  };
  return std::exp(numeric::logsumexp(terms));
}

ChinchillaCoefficients reduce_to_chinchilla(const ScalingCoefficients& coeffs, double experts) {
  coeffs.validate();
  const double e = e_hat(experts, coeffs);
  const double log_e = std::log(e);
  return ChinchillaCoefficients{
      coeffs.a * std::pow(e, coeffs.delta),
      coeffs.alpha + coeffs.gamma * log_e,
      coeffs.b * std::pow(e, coeffs.omega),
      coeffs.beta + coeffs.zeta * log_e,
      coeffs.c,
  };
}

double chinchilla_loss(double n_act, double tokens, const ChinchillaCoefficients& coeffs) {
  return coeffs.m * std::pow(n_act, coeffs.mu) + coeffs.n * std::pow(tokens, coeffs.nu) + coeffs.c;
}

double peak_learning_rate(double n_act_nonemb, double experts, const LrRule& rule) {
  return std::exp(rule.intercept + rule.n_slope * std::log(n_act_nonemb) +
                  rule.e_slope * std::log(experts));
}

std::string coefficients_to_json(const ScalingCoefficients& k) {
  nlohmann::ordered_json j;
  j["a"] = k.a;
  j["alpha"] = k.alpha;
  j["delta"] = k.delta;
  j["gamma"] = k.gamma;
  j["b"] = k.b;
  j["beta"] = k.beta;
  j["omega"] = k.omega;
  j["zeta"] = k.zeta;
  j["e_start"] = k.e_start;
  j["e_max"] = k.e_max;
  j["c"] = k.c;
  return j.dump(2);
}

ScalingCoefficients coefficients_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, std::string("coefficients: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "coefficients: expected a JSON object");
  ScalingCoefficients k;
  auto field = [&](const char* name, double& slot) {
    if (!j.contains(name) || !j[name].is_number()) {
      throw Error(ErrorKind::ValidationError, std::string("coefficients: missing numeric field '") + name + "'");
    }
    slot = j[name].get<double>();
  };
  field("a", k.a);
  field("alpha", k.alpha);
  field("delta", k.delta);
  field("gamma", k.gamma);
  field("b", k.b);
  field("beta", k.beta);
  field("omega", k.omega);
  field("zeta", k.zeta);
  field("e_start", k.e_start);
  field("e_max", k.e_max);
  field("c", k.c);
  k.validate();
  return k;
}

}  // namespace moescale
