// SPDX-License-Identifier: Apache-2.0
//
// JSON and CSV encodings of planner outputs. JSON documents carry a top-level
// "schema_version"; CSV is one header line plus one row per point, with
// doubles printed to round-trip precision.
#pragma once

#include <string>
#include <vector>

#include "moescale/planner.hpp"

namespace moescale {

inline constexpr int kSchemaVersion = 1;

struct SavingsPoint {
  double flops;
  Count experts;
  double savings;
};

std::string format_double(double value);

std::string plan_to_json(const PlanResult& plan);
std::string plan_to_csv(const PlanResult& plan);

std::string expert_choice_to_json(const ExpertChoice& choice);
std::string expert_choice_to_csv(const ExpertChoice& choice);

std::string isoflop_to_json(double flops, double experts, const std::vector<IsoflopPoint>& points);
std::string isoflop_to_csv(const std::vector<IsoflopPoint>& points);

std::string savings_to_json(const std::vector<SavingsPoint>& points);
std::string savings_to_csv(const std::vector<SavingsPoint>& points);

std::string rule_of_thumb_to_json(const RuleOfThumbResult& result);
std::string rule_of_thumb_to_csv(const RuleOfThumbResult& result);

}  // namespace moescale
