// SPDX-License-Identifier: Apache-2.0
//
// Budget-constrained model planning on top of the joint law: compute-optimal
// (N, D), memory caps with optional KV cache, a shared training + inference
// FLOP budget, optimal expert counts, isoFLOP profiles, FLOP savings against
// dense models and the fixed-memory rule-of-thumb comparison.
//
// Planners work with real-valued d_model under the standard shape rule
// (n_blocks = n_heads = d_model / 64); snapping to integer shapes happens only
// in the reported `rounded_shape`.
#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "moescale/accounting.hpp"
#include "moescale/law.hpp"

namespace moescale {

enum class BindingConstraint { Compute, Memory, None };

std::string_view to_string(BindingConstraint binding) noexcept;

struct BudgetSpec {
  double train_flops = 0.0;
  double inference_tokens = 0.0;
  std::optional<double> memory_cap;  // bytes
  double kv_tokens = 0.0;
  double bytes_per_element = 2.0;
  std::vector<Count> expert_choices{1, 2, 4, 8, 16, 32};
};

struct PlanResult {
  Count experts = 1;
  double n_act = 0.0;
  double n_total = 0.0;
  double tokens = 0.0;
  double predicted_loss = 0.0;
  double memory_bytes = 0.0;
  double flops_train = 0.0;
  double flops_inference = 0.0;
  double d_model = 0.0;
  ModelShape rounded_shape;
  BindingConstraint binding = BindingConstraint::Compute;
};

struct ComputeOptimum {
  double n_act;
  double tokens;
};

/// Closed-form minimizer of the fixed-E law subject to 6*N*D = F, using the
/// positive-exponent convention α' = -μ(E), β' = -ν(E):
///   G = (α' m / (β' n))^(1/(α'+β')),  N = G (F/6)^(β'/(α'+β')),  D = F / (6 N).
/// Throws DegenerateExponents when μ(E) >= 0 or ν(E) >= 0.
ComputeOptimum compute_optimal(double flops, double experts, const ScalingCoefficients& coeffs);

/// Loss at the compute-optimal point.
double compute_optimal_loss(double flops, double experts, const ScalingCoefficients& coeffs);

/// Largest active-parameter count of a standard-rule model with `experts`
/// experts whose weights plus KV cache fit in memory_cap bytes. Throws
/// Infeasible if the smallest standard shape does not fit.
double max_active_params_for_memory(double memory_cap, double experts, double kv_tokens,
                                    double bytes_per_element);

/// Compute-optimal N clamped to the memory cap (weights, plus KV cache when
/// kv_tokens > 0). Without a cap this is the plain compute optimum.
PlanResult memory_optimal(const BudgetSpec& budget, Count experts, const ScalingCoefficients& coeffs);

/// Minimizes L(N, (F - 2 N D_inf) / (6 N), E) over log N by golden-section
/// search, clamped to the memory cap when one is set. Throws Infeasible when
/// the smallest standard model cannot serve D_inf tokens within F.
PlanResult inference_optimal(const BudgetSpec& budget, Count experts,
                             const ScalingCoefficients& coeffs);

struct ExpertChoice {
  Count experts = 1;
  PlanResult plan;
  /// The largest candidate won, reported as ">= max".
  bool at_largest_candidate = false;
};

/// Argmin of predicted loss over budget.expert_choices; ties go to the
/// smaller E. Infeasible candidates are skipped.
ExpertChoice optimal_experts(const BudgetSpec& budget, const ScalingCoefficients& coeffs);

struct IsoflopPoint {
  double tokens;
  double n_act;
  double n_total;  // NaN when N is below the smallest standard shape
  double loss;
  double memory_bytes;
};

std::vector<IsoflopPoint> isoflop_curve(double flops, double experts,
                                        std::span<const double> token_grid,
                                        const ScalingCoefficients& coeffs, double kv_tokens = 0.0,
                                        double bytes_per_element = 2.0);

/// count points log-spaced over [lo, hi].
std::vector<double> log_spaced(double lo, double hi, std::size_t count);

/// 1 - F'/F where F' is the budget at which the compute-optimal E-expert model
/// matches the compute-optimal dense loss at F. Throws NoCrossing if that
/// budget lies outside [F * 1e-6, F].
double flops_savings(double flops, double experts, const ScalingCoefficients& coeffs);

enum class Verdict { MoeWins, DenseWins, Tie };

std::string_view to_string(Verdict verdict) noexcept;

enum class TokenMatching {
  /// MoE trains on E times the dense token count.
  ExpertMultiple,
  /// MoE trains on the tokens that spend the dense model's FLOPs.
  ComputeMatched,
};

struct RuleOfThumbResult {
  double n_total = 0.0;
  Count experts = 1;
  double n_act_dense = 0.0;
  double tokens_dense = 0.0;
  double loss_dense = 0.0;
  double n_act_moe = 0.0;
  double tokens_moe = 0.0;
  double loss_moe = 0.0;
  Verdict verdict = Verdict::Tie;
  /// E outside [2, 8], where the rule is not claimed to hold.
  bool outside_guaranteed_regime = false;
};

/// Dense model with n_total parameters trained on dense_tokens (default: its
/// compute-optimal token count) against a memory-matched E-expert MoE.
RuleOfThumbResult rule_of_thumb_compare(double n_total, Count experts,
                                        const ScalingCoefficients& coeffs,
                                        std::optional<double> dense_tokens = std::nullopt,
                                        TokenMatching matching = TokenMatching::ExpertMultiple);

}  // namespace moescale
