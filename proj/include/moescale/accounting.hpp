// SPDX-License-Identifier: Apache-2.0
//
// Parameter, FLOP and memory arithmetic for decoder-only transformers whose
// MLP blocks may be replaced by switch-style expert layers.
#pragma once

#include <cstdint>
#include <optional>

namespace moescale {

using Count = std::uint64_t;

inline constexpr Count kDefaultVocab = 50257;
/// Width per attention head (and per block) under the standard scaling rule.
inline constexpr Count kStandardHeadDim = 64;

struct ModelShape {
  Count d_model = kStandardHeadDim;
  Count n_blocks = 1;
  Count n_heads = 1;
  Count experts = 1;

  /// n_blocks == n_heads == d_model / 64 with d_model a multiple of 64.
  bool is_standard() const noexcept;

  static ModelShape standard(Count d_model, Count experts = 1);

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct ParamCounts {
  Count active = 0;
  Count total = 0;
  Count active_nonemb = 0;
};

// Exact counts. Throws std::overflow_error if the result leaves 64 bits, which
// cannot happen for standard shapes with d_model <= 2^20 and E <= 64.
Count active_params(const ModelShape& shape, Count vocab = kDefaultVocab);
Count total_params(const ModelShape& shape, Count vocab = kDefaultVocab);
ParamCounts param_counts(const ModelShape& shape, Count vocab = kDefaultVocab);

/// Continuous counterparts used by the planners, d_model real-valued and
/// n_blocks = d_model / 64 unless `blocks` is given.
double active_params_real(double d_model, std::optional<double> blocks = std::nullopt,
                          double vocab = kDefaultVocab);
double total_params_real(double d_model, double experts, std::optional<double> blocks = std::nullopt,
                         double vocab = kDefaultVocab);

struct ShapeInversion {
  double d_model = 0.0;      // real root of the count cubic
  ModelShape rounded;        // d_model snapped to the nearest multiple of 64
  double relative_error = 0.0;  // (count(rounded) - target) / target
};

/// Solves 2*V*d + (13/64)*d^3 = n_act for d by bisection on [64, 2^17].
/// Throws Error(NoRoot) below the smallest standard shape.
ShapeInversion shape_from_active(double n_act, Count vocab = kDefaultVocab);

/// Same inversion for the total count. With `blocks` set, depth is held fixed
/// and the quadratic 2*V*d + (4+9E)*blocks*d^2 = n_total is solved instead.
ShapeInversion shape_from_total(double n_total, Count experts,
                                std::optional<Count> blocks = std::nullopt,
                                Count vocab = kDefaultVocab);

double training_flops(double n_act, double tokens);
double inference_flops(double n_act, double tokens);

Count kv_cache_elements(Count tokens_cached, const ModelShape& shape);

/// bytes_per_element * (total params + KV cache elements). b must be 1, 2, 4 or 8.
Count memory_bytes(const ModelShape& shape, Count tokens_cached, Count bytes_per_element,
                   Count vocab = kDefaultVocab);

/// Real-valued memory for a standard shape of width d_model.
double memory_bytes_real(double d_model, double experts, double tokens_cached,
                         double bytes_per_element, double vocab = kDefaultVocab);

}  // namespace moescale
