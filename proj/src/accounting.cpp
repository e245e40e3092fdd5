// SPDX-License-Identifier: Apache-2.0
#include "moescale/accounting.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "moescale/error.hpp"
#include "moescale/numeric.hpp"

namespace moescale {
namespace {

__extension__ typedef unsigned __int128 Wide;

Count narrow(Wide value) {
  if (value > std::numeric_limits<Count>::max()) {
    throw std::overflow_error("parameter count exceeds 64 bits");
  }
  return static_cast<Count>(value);
}

void require_positive(const ModelShape& shape) {
  if (shape.d_model == 0 || shape.n_blocks == 0 || shape.n_heads == 0 || shape.experts == 0) {
    throw std::invalid_argument("ModelShape fields must be positive");
  }
}

// 2*V*d + k*blocks*d^2 for the per-block multiplier k.
Wide count_with_multiplier(const ModelShape& shape, Wide multiplier, Count vocab) {
  const Wide d = shape.d_model;
  return 2 * d * vocab + multiplier * shape.n_blocks * d * d;
}

constexpr double kMinWidth = static_cast<double>(kStandardHeadDim);
constexpr double kMaxWidth = 131072.0;  // 2^17

ShapeInversion invert(const std::function<double(double)>& count_of_width, double target,
                      std::optional<Count> forced_blocks, Count experts) {
  const double at_min = count_of_width(kMinWidth);
  const double at_max = count_of_width(kMaxWidth);
  if (!(target >= at_min) || !(target <= at_max)) {
    throw Error(ErrorKind::NoRoot, "parameter count " + std::to_string(target) +
                                       " is outside the representable range [" +
                                       std::to_string(at_min) + ", " + std::to_string(at_max) +
                                       "]");
  }
  ShapeInversion out;
  out.d_model = numeric::bisect([&](double d) { return count_of_width(d) - target; }, kMinWidth,
                                kMaxWidth, 1e-12);

  const double units = std::max(1.0, std::round(out.d_model / kMinWidth));
  const Count snapped = static_cast<Count>(units) * kStandardHeadDim;
  out.rounded = ModelShape::standard(snapped, experts);
  if (forced_blocks) out.rounded.n_blocks = *forced_blocks;
  out.relative_error = (count_of_width(static_cast<double>(snapped)) - target) / target;
  return out;
}

}  // namespace

bool ModelShape::is_standard() const noexcept {
  return d_model % kStandardHeadDim == 0 && n_blocks == d_model / kStandardHeadDim &&
         n_heads == n_blocks && experts >= 1;
}

ModelShape ModelShape::standard(Count d_model, Count experts) {
  if (d_model < kStandardHeadDim || d_model % kStandardHeadDim != 0) {
    throw std::invalid_argument("standard shapes need d_model a positive multiple of 64");
  }
  const Count units = d_model / kStandardHeadDim;
  return ModelShape{d_model, units, units, experts};
}

Count active_params(const ModelShape& shape, Count vocab) {
  require_positive(shape);
  return narrow(count_with_multiplier(shape, 13, vocab));
}

Count total_params(const ModelShape& shape, Count vocab) {
  require_positive(shape);
  return narrow(count_with_multiplier(shape, Wide{4} + Wide{9} * shape.experts, vocab));
}

ParamCounts param_counts(const ModelShape& shape, Count vocab) {
  ParamCounts counts;
  counts.active = active_params(shape, vocab);
  counts.total = total_params(shape, vocab);
  counts.active_nonemb = counts.active - 2 * shape.d_model * vocab;
  return counts;
}

double active_params_real(double d_model, std::optional<double> blocks, double vocab) {
  const double depth = blocks.value_or(d_model / kMinWidth);
  return 2.0 * d_model * vocab + 13.0 * depth * d_model * d_model;
}

double total_params_real(double d_model, double experts, std::optional<double> blocks,
                         double vocab) {
  const double depth = blocks.value_or(d_model / kMinWidth);
  return 2.0 * d_model * vocab + (4.0 + 9.0 * experts) * depth * d_model * d_model;
}

ShapeInversion shape_from_active(double n_act, Count vocab) {
  const double v = static_cast<double>(vocab);
  return invert([v](double d) { return active_params_real(d, std::nullopt, v); }, n_act,
                std::nullopt, 1);
}

ShapeInversion shape_from_total(double n_total, Count experts, std::optional<Count> blocks,
                                Count vocab) {
  if (experts == 0) throw std::invalid_argument("experts must be >= 1");
  const double v = static_cast<double>(vocab);
  const double e = static_cast<double>(experts);
  std::optional<double> depth;
  if (blocks) depth = static_cast<double>(*blocks);
  return invert([=](double d) { return total_params_real(d, e, depth, v); }, n_total, blocks,
                experts);
}

double training_flops(double n_act, double tokens) { return 6.0 * n_act * tokens; }

double inference_flops(double n_act, double tokens) { return 2.0 * n_act * tokens; }

Count kv_cache_elements(Count tokens_cached, const ModelShape& shape) {
  return narrow(Wide{2} * tokens_cached * shape.n_blocks * shape.d_model);
}

Count memory_bytes(const ModelShape& shape, Count tokens_cached, Count bytes_per_element,
                   Count vocab) {
  if (bytes_per_element != 1 && bytes_per_element != 2 && bytes_per_element != 4 &&
      bytes_per_element != 8) {
    throw std::invalid_argument("bytes_per_element must be 1, 2, 4 or 8");
  }
  const Wide elements =
      Wide{total_params(shape, vocab)} + Wide{kv_cache_elements(tokens_cached, shape)};
  return narrow(elements * bytes_per_element);
}

double memory_bytes_real(double d_model, double experts, double tokens_cached,
                         double bytes_per_element, double vocab) {
  const double depth = d_model / kMinWidth;
  return bytes_per_element * (total_params_real(d_model, experts, std::nullopt, vocab) +
                              2.0 * tokens_cached * depth * d_model);
}

}  // namespace moescale
