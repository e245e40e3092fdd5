// SPDX-License-Identifier: Apache-2.0
#include "moescale/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "moescale/error.hpp"
#include "moescale/numeric.hpp"

namespace moescale {
namespace {

constexpr double kMinWidth = static_cast<double>(kStandardHeadDim);
constexpr double kMaxWidth = 131072.0;
constexpr double kSearchLow = 1e6;
constexpr double kSearchHigh = 1e13;

struct Allocation {
  double g;
  double n_power;  // N = G * (F/6)^n_power
};

Allocation allocation(double experts, const ScalingCoefficients& coeffs) {
  const auto k = reduce_to_chinchilla(coeffs, experts);
  if (k.mu >= 0.0 || k.nu >= 0.0) {
    throw Error(ErrorKind::DegenerateExponents,
                "mu(E) and nu(E) must be negative at E=" + std::to_string(experts));
  }
  const double ap = -k.mu;
  const double bp = -k.nu;
  return Allocation{std::pow(ap * k.m / (bp * k.n), 1.0 / (ap + bp)), bp / (ap + bp)};
}

void fill_footprint(PlanResult& plan, double kv_tokens, double bytes_per_element) {
  const auto inv = shape_from_active(plan.n_act);
  plan.d_model = inv.d_model;
  plan.rounded_shape = inv.rounded;
  plan.rounded_shape.experts = plan.experts;
  const double e = static_cast<double>(plan.experts);
  plan.n_total = total_params_real(inv.d_model, e);
  plan.memory_bytes = memory_bytes_real(inv.d_model, e, kv_tokens, bytes_per_element);
}

void check_budget(const BudgetSpec& b) {
  if (!(b.train_flops > 0.0)) throw std::invalid_argument("train_flops must be positive");
  if (!(b.inference_tokens >= 0.0)) throw std::invalid_argument("inference_tokens must be >= 0");
  if (!(b.kv_tokens >= 0.0)) throw std::invalid_argument("kv_tokens must be >= 0");
  if (b.memory_cap && !(*b.memory_cap > 0.0)) throw std::invalid_argument("memory_cap must be positive");
}

}  // namespace

std::string_view to_string(BindingConstraint binding) noexcept {
  switch (binding) {
    case BindingConstraint::Compute: return "compute";
    case BindingConstraint::Memory: return "memory";
    case BindingConstraint::None: return "none";
  }
  return "none";
}

std::string_view to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::MoeWins: return "moe_wins";
    case Verdict::DenseWins: return "dense_wins";
    case Verdict::Tie: return "tie";
  }
  return "tie";
}

ComputeOptimum compute_optimal(double flops, double experts, const ScalingCoefficients& coeffs) {
  if (!(flops >= 6.0)) throw std::invalid_argument("flops must be >= 6");
  const auto alloc = allocation(experts, coeffs);
  const double n = alloc.g * std::pow(flops / 6.0, alloc.n_power);
  return ComputeOptimum{n, flops / (6.0 * n)};
}

double compute_optimal_loss(double flops, double experts, const ScalingCoefficients& coeffs) {
  const auto opt = compute_optimal(flops, experts, coeffs);
  return loss(opt.n_act, opt.tokens, experts, coeffs);
}

double max_active_params_for_memory(double memory_cap, double experts, double kv_tokens,
                                    double bytes_per_element) {
  const auto memory_at = [&](double d) {
    return memory_bytes_real(d, experts, kv_tokens, bytes_per_element);
  };
  if (memory_at(kMinWidth) > memory_cap) {
    throw Error(ErrorKind::Infeasible, "even the smallest standard shape exceeds the memory cap");
  }
  if (memory_at(kMaxWidth) <= memory_cap) return active_params_real(kMaxWidth);
  const double d = numeric::bisect([&](double w) { return memory_at(w) - memory_cap; }, kMinWidth,
                                   kMaxWidth, 1e-12);
  return active_params_real(d);
}

PlanResult memory_optimal(const BudgetSpec& budget, Count experts, const ScalingCoefficients& coeffs) {
  check_budget(budget);
  const double e = static_cast<double>(experts);
  const double flops = budget.train_flops;
  const auto opt = compute_optimal(flops, e, coeffs);

  PlanResult plan;
  plan.experts = experts;
  plan.n_act = opt.n_act;
  plan.binding = BindingConstraint::Compute;
  if (budget.memory_cap) {
    const double cap_n =
        max_active_params_for_memory(*budget.memory_cap, e, budget.kv_tokens, budget.bytes_per_element);
    if (cap_n < opt.n_act) {
      plan.n_act = cap_n;
      plan.binding = BindingConstraint::Memory;
    }
  }
  plan.tokens = plan.binding == BindingConstraint::Compute ? opt.tokens : flops / (6.0 * plan.n_act);
  plan.predicted_loss = loss(plan.n_act, plan.tokens, e, coeffs);
  plan.flops_train = training_flops(plan.n_act, plan.tokens);
  plan.flops_inference = 0.0;
  fill_footprint(plan, budget.kv_tokens, budget.bytes_per_element);
  return plan;
}

PlanResult inference_optimal(const BudgetSpec& budget, Count experts,
                             const ScalingCoefficients& coeffs) {
  check_budget(budget);
  if (budget.inference_tokens == 0.0) return memory_optimal(budget, experts, coeffs);

  const double e = static_cast<double>(experts);
  const double flops = budget.train_flops;
  const double d_inf = budget.inference_tokens;
  const double smallest = active_params_real(kMinWidth);
  if (2.0 * smallest * d_inf >= flops) {
    throw Error(ErrorKind::Infeasible,
                "inference on the requested tokens exhausts the budget for every model size");
  }
  // N beyond this leaves no FLOPs for training.
  const double n_ceiling = flops / (2.0 * d_inf);
  const auto objective = [&](double log_n) {
    const double n = std::exp(log_n);
    const double tokens = (flops - 2.0 * n * d_inf) / (6.0 * n);
    if (!(tokens > 0.0)) return std::numeric_limits<double>::infinity();
    return loss(n, tokens, e, coeffs);
  };

  double lo = std::log(kSearchLow);
  double hi = std::log(std::min(kSearchHigh, n_ceiling * (1.0 - 1e-9)));
  const double floor = std::log(1.0);
  const double ceiling = std::log(n_ceiling * (1.0 - 1e-9));
  numeric::ScalarMinimum best{};
  for (int widen = 0; widen < 16; ++widen) {
    if (lo >= hi) lo = hi - std::log(1e3);
    best = numeric::golden_section(objective, lo, hi, 1e-9);
    const double edge = 1e-6 * (hi - lo);
    bool moved = false;
    if (best.x - lo < edge && lo > floor) {
      lo = std::max(floor, lo - std::log(1e3));
      moved = true;
    }
    if (hi - best.x < edge && hi < ceiling) {
      hi = std::min(ceiling, hi + std::log(1e3));
      moved = true;
    }
    if (!moved) break;
  }

  PlanResult plan;
  plan.experts = experts;
  plan.n_act = std::exp(best.x);
  plan.binding = BindingConstraint::Compute;
  if (budget.memory_cap) {
    const double cap_n =
        max_active_params_for_memory(*budget.memory_cap, e, budget.kv_tokens, budget.bytes_per_element);
    if (cap_n < plan.n_act) {
      plan.n_act = cap_n;
      plan.binding = BindingConstraint::Memory;
    }
  }
  plan.flops_inference = inference_flops(plan.n_act, d_inf);
  plan.tokens = (flops - plan.flops_inference) / (6.0 * plan.n_act);
  if (!(plan.tokens > 0.0)) {
    throw Error(ErrorKind::Infeasible, "no training tokens left after inference");
  }
  plan.flops_train = training_flops(plan.n_act, plan.tokens);
  plan.predicted_loss = loss(plan.n_act, plan.tokens, e, coeffs);
  fill_footprint(plan, budget.kv_tokens, budget.bytes_per_element);
  return plan;
}

ExpertChoice optimal_experts(const BudgetSpec& budget, const ScalingCoefficients& coeffs) {
  if (budget.expert_choices.empty()) throw std::invalid_argument("expert_choices is empty");
  std::vector<Count> choices = budget.expert_choices;
  std::sort(choices.begin(), choices.end());
  choices.erase(std::unique(choices.begin(), choices.end()), choices.end());

  std::optional<ExpertChoice> best;
  for (Count e : choices) {
    PlanResult plan;
    try {
      plan = budget.inference_tokens > 0.0 ? inference_optimal(budget, e, coeffs)
                                           : memory_optimal(budget, e, coeffs);
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::Infeasible) continue;
      throw;
    }
    if (!best || plan.predicted_loss < best->plan.predicted_loss) {
      best = ExpertChoice{e, plan, false};
    }
  }
  if (!best) throw Error(ErrorKind::Infeasible, "no expert count satisfies the budget");
  best->at_largest_candidate = best->experts == choices.back();
  return *best;
}

std::vector<IsoflopPoint> isoflop_curve(double flops, double experts,
                                        std::span<const double> token_grid,
                                        const ScalingCoefficients& coeffs, double kv_tokens,
                                        double bytes_per_element) {
  std::vector<IsoflopPoint> out;
  out.reserve(token_grid.size());
  const double smallest = active_params_real(kMinWidth);
  for (double d : token_grid) {
    const double n = flops / (6.0 * d);
    if (!(n >= 1.0)) throw std::invalid_argument("token count leaves fewer than one parameter");
    IsoflopPoint p{d, n, std::numeric_limits<double>::quiet_NaN(), loss(n, d, experts, coeffs),
                   std::numeric_limits<double>::quiet_NaN()};
    if (n >= smallest) {
      const double width = shape_from_active(n).d_model;
      p.n_total = total_params_real(width, experts);
      p.memory_bytes = memory_bytes_real(width, experts, kv_tokens, bytes_per_element);
    }
    out.push_back(p);
  }
  return out;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) throw std::invalid_argument("bad log grid");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = std::exp(a + step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

double flops_savings(double flops, double experts, const ScalingCoefficients& coeffs) {
  if (experts == 1.0) return 0.0;
  const double target = compute_optimal_loss(flops, 1.0, coeffs);
  const auto gap = [&](double log_f) {
    return compute_optimal_loss(std::exp(log_f), experts, coeffs) - target;
  };
  const double hi = std::log(flops);
  const double lo = std::log(flops * 1e-6);
  const double at_hi = gap(hi);
  if (at_hi > 0.0) {
    throw Error(ErrorKind::NoCrossing, "the MoE does not reach the dense loss within the budget");
  }
  if (at_hi == 0.0) return 0.0;
  if (gap(lo) <= 0.0) {
    throw Error(ErrorKind::NoCrossing, "the MoE beats the dense loss even at 1e-6 of the budget");
  }
  // Relative tolerance 1e-6 on F' is an absolute 1e-6 on log F'.
  double a = lo;
  double b = hi;
  while (b - a > 1e-7) {
    const double mid = 0.5 * (a + b);
    if (gap(mid) > 0.0) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return 1.0 - std::exp(0.5 * (a + b)) / flops;
}

RuleOfThumbResult rule_of_thumb_compare(double n_total, Count experts,
                                        const ScalingCoefficients& coeffs,
                                        std::optional<double> dense_tokens, TokenMatching matching) {
  if (experts == 0) throw std::invalid_argument("experts must be >= 1");
  RuleOfThumbResult r;
  r.n_total = n_total;
  r.experts = experts;
  r.outside_guaranteed_regime = experts < 2 || experts > 8;

  r.n_act_dense = n_total;
  if (dense_tokens) {
    r.tokens_dense = *dense_tokens;
  } else {
    // Invert N = G (F/6)^p for the budget at which n_total is compute-optimal.
    const auto alloc = allocation(1.0, coeffs);
    const double flops_over_6 = std::pow(n_total / alloc.g, 1.0 / alloc.n_power);
    r.tokens_dense = flops_over_6 / n_total;
  }
  r.loss_dense = loss(r.n_act_dense, r.tokens_dense, 1.0, coeffs);

  // The MoE is the snapped standard shape; at E = 1 it is the dense model itself.
  r.n_act_moe = experts == 1
                    ? n_total
                    : static_cast<double>(active_params(shape_from_total(n_total, experts).rounded));
  r.tokens_moe = matching == TokenMatching::ExpertMultiple
                     ? static_cast<double>(experts) * r.tokens_dense
                     : r.tokens_dense * r.n_act_dense / r.n_act_moe;
  r.loss_moe = loss(r.n_act_moe, r.tokens_moe, static_cast<double>(experts), coeffs);

  if (r.loss_moe == r.loss_dense) {
    r.verdict = Verdict::Tie;
  } else {
    r.verdict = r.loss_moe < r.loss_dense ? Verdict::MoeWins : Verdict::DenseWins;
  }
  return r;
}

}  // namespace moescale
