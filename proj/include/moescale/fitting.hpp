// SPDX-License-Identifier: Apache-2.0
//
// Robust log-space regression of the joint law on run records.
//
// The law is evaluated as logsumexp of three linear terms and regressed
// against ln(observed loss) under a weighted Huber penalty. Coefficients are
// optimized in the unconstrained parameterization
//
//   (ln a, α, δ, γ, ln b, β, ω, ζ, ln c, ln e_start, ln(e_max - e_start))
//
// so positivity of a, b, c and the ordering e_start < e_max hold throughout.
// Minimization is multi-start L-BFGS from a grid of seeds, and the winning
// seed is the one with the lowest train + held-out RMSE.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "moescale/dataio.hpp"
#include "moescale/law.hpp"

namespace moescale {

enum ThetaIndex : std::size_t {
  kLogA,
  kAlpha,
  kDelta,
  kGamma,
  kLogB,
  kBeta,
  kOmega,
  kZeta,
  kLogC,
  kLogEStart,
  kLogESpan,
  kThetaSize,
};

using Theta = std::array<double, kThetaSize>;

Theta to_theta(const ScalingCoefficients& coeffs);
ScalingCoefficients from_theta(const Theta& theta);

double predict_log_loss(const Theta& theta, double log_n, double log_d, double experts);
/// Same value; also writes d(log L)/d(theta).
double predict_log_loss(const Theta& theta, double log_n, double log_d, double experts,
                        std::span<double, kThetaSize> grad);

double huber(double residual, double delta);
double huber_derivative(double residual, double delta);

/// Maps records to per-record weights. Replaceable through FitConfig.
using WeightPolicy = std::function<std::vector<double>(const std::vector<RunRecord>&)>;

/// w_i = min_j L_j / L_i, so the best run weighs 1 and worse runs less.
/// Records carrying a weight_override keep it. Throws EmptyDataset.
std::vector<double> run_weights(const std::vector<RunRecord>& records);

struct FitConfig {
  double huber_delta = 0.01;
  double step_size = 1e-4;
  double weight_decay = 1e-5;
  bool decay_log_c = false;
  int max_iterations = 2000;
  int history_size = 10;
  double rel_tolerance = 1e-10;
  /// Explicit seeds; empty means the full published grid.
  std::vector<Theta> init_grid;
  /// If > 0, minimize from a seeded random subset of this many grid points.
  std::size_t grid_sample = 0;
  std::uint64_t seed = 0;
  std::size_t validation_size = 30;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
  WeightPolicy weight_policy = run_weights;
};

/// sum_i w_i * huber(pred_i - ln L_i) + weight_decay * |theta|^2, where the
/// decay skips ln c unless config.decay_log_c. If `grad` is non-empty the
/// analytic gradient is written there.
double objective(const Theta& theta, const std::vector<RunRecord>& records,
                 std::span<const double> weights, const FitConfig& config,
                 std::span<double> grad = {});

/// Cartesian product of the published per-parameter triples (3^9 seeds).
/// α and β seeds are negated; e_start and e_max start at (2, 512).
std::vector<Theta> init_grid();

/// k distinct grid points chosen by a seeded shuffle, kept in grid order.
std::vector<Theta> subsample_grid(const std::vector<Theta>& grid, std::size_t k,
                                  std::uint64_t seed);

/// Root-mean-square of predicted minus observed ln loss.
double rmse(const Theta& theta, const std::vector<RunRecord>& records);
/// Same on the raw loss scale.
double rmse_raw(const Theta& theta, const std::vector<RunRecord>& records);

struct HoldoutSplit {
  std::vector<RunRecord> train;
  std::vector<RunRecord> validation;
};

/// Validation = the `validation_size` lowest-loss records, ties broken by
/// (n_act, tokens, experts). Throws TooFewRecords without at least one
/// training record left over.
HoldoutSplit split_holdout(const std::vector<RunRecord>& records, std::size_t validation_size = 30);

struct FitReport {
  ScalingCoefficients coefficients;
  Theta theta{};
  double rmse_train = 0.0;
  double rmse_val = 0.0;
  double rmse_train_raw = 0.0;
  double rmse_val_raw = 0.0;
  double score = 0.0;
  /// predicted minus observed ln loss, in input order.
  std::vector<double> per_record_residuals;
  bool converged = false;
  int iterations = 0;
  std::size_t seed_index = 0;
  std::size_t seeds_tried = 0;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
};

/// Throws Underdetermined (fewer than 11 records, or a single expert count),
/// ValidationError (records without a loss) or NonFinite (every seed diverged).
FitReport fit(const std::vector<RunRecord>& records, const FitConfig& config = {});

std::string fit_report_to_json(const FitReport& report);

struct SeparateFitReport {
  std::map<Count, ChinchillaCoefficients> per_expert;
  double rmse_train = 0.0;
  double rmse_val = 0.0;
};

/// Independent Chinchilla fits per expert count, sharing the holdout split,
/// Huber settings and (α, β, A, B, C) seed grid with the joint fit.
SeparateFitReport fit_separate_chinchilla(const std::vector<RunRecord>& records,
                                          const FitConfig& config = {});

struct LrObservation {
  double n_act_nonemb;
  double experts;
  double best_lr;
};

/// Ordinary least squares of ln(lr) on (1, ln N, ln E). With a single expert
/// count the E slope is pinned to zero.
LrRule fit_lr_rule(const std::vector<LrObservation>& points);

}  // namespace moescale
