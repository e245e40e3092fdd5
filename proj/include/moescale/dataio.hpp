// SPDX-License-Identifier: Apache-2.0
//
// Training-run records: parsing, serialization, the bundled experiment grid
// and a synthetic generator that draws losses from a known law.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moescale/accounting.hpp"
#include "moescale/law.hpp"

namespace moescale {

struct RunRecord {
  std::optional<ModelShape> shape;
  Count n_act = 0;
  Count n_total = 0;
  Count experts = 1;
  double tokens = 0.0;
  std::optional<double> observed_loss;
  std::optional<double> weight_override;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

enum class RunFormat { Csv, Json };

/// Parses "12", "1.5e9", "321M", "16.0B" (K/M/B decimal multipliers).
/// Returns nullopt for anything else.
std::optional<double> parse_suffixed(std::string_view text);

/// One record per (config, token count). A tokens cell may list several
/// comma-separated values (quoted in CSV, an array in JSON). Shape-bearing rows
/// have n_act / n_total recomputed exactly; displayed counts must agree to
/// within half a unit of their last shown digit.
std::vector<RunRecord> parse_runs(std::string_view text, RunFormat format);

std::string serialize_runs(const std::vector<RunRecord>& records, RunFormat format);

/// Throws Error(ValidationError) naming the offending field.
void validate_record(const RunRecord& record, Count vocab = kDefaultVocab);

/// Raw CSV text of the bundled experiment listing.
std::string_view bundled_experiment_grid_csv();

/// All listed (config, token count) pairs, loss-free.
std::vector<RunRecord> bundled_experiment_grid();

/// observed_loss = exp(ln L(N, D, E) + eps), eps ~ Normal(0, noise_sigma^2).
std::vector<RunRecord> synthesize(const std::vector<RunRecord>& grid,
                                  const ScalingCoefficients& coeffs, double noise_sigma,
                                  std::uint64_t seed);

}  // namespace moescale
