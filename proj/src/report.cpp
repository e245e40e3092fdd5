// SPDX-License-Identifier: Apache-2.0
#include "moescale/report.hpp"

#include <cmath>
#include <charconv>
#include <nlohmann/json.hpp>

namespace moescale {
namespace {

using ordered_json = nlohmann::ordered_json;

// NaN and infinities have no JSON spelling; they become null.
ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ordered_json plan_fields(const PlanResult& p) {
  ordered_json j;
  j["experts"] = p.experts;
  j["n_act"] = number(p.n_act);
  j["n_total"] = number(p.n_total);
  j["tokens"] = number(p.tokens);
  j["predicted_loss"] = number(p.predicted_loss);
  j["memory_bytes"] = number(p.memory_bytes);
  j["flops_train"] = number(p.flops_train);
  j["flops_inference"] = number(p.flops_inference);
  j["d_model"] = number(p.d_model);
  j["rounded_shape"] = {{"d_model", p.rounded_shape.d_model},
                        {"n_blocks", p.rounded_shape.n_blocks},
                        {"n_heads", p.rounded_shape.n_heads},
                        {"experts", p.rounded_shape.experts}};
  j["binding_constraint"] = std::string(to_string(p.binding));
  return j;
}

const std::string kPlanColumns =
    "experts,tokens,n_act,n_total,loss,memory_bytes,flops_train,flops_inference,d_model,"
    "binding_constraint";

std::string plan_row(const PlanResult& p) {
  return std::to_string(p.experts) + ',' + format_double(p.tokens) + ',' + format_double(p.n_act) +
         ',' + format_double(p.n_total) + ',' + format_double(p.predicted_loss) + ',' +
         format_double(p.memory_bytes) + ',' + format_double(p.flops_train) + ',' +
         format_double(p.flops_inference) + ',' + format_double(p.d_model) + ',' +
         std::string(to_string(p.binding)) + '\n';
}

std::string document(ordered_json body) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  for (auto& [key, value] : body.items()) j[key] = value;
  return j.dump(2) + '\n';
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string plan_to_json(const PlanResult& plan) { return document(plan_fields(plan)); }

std::string plan_to_csv(const PlanResult& plan) { return kPlanColumns + '\n' + plan_row(plan); }

std::string expert_choice_to_json(const ExpertChoice& choice) {
  ordered_json j;
  j["experts"] = choice.experts;
  j["at_largest_candidate"] = choice.at_largest_candidate;
  j["plan"] = plan_fields(choice.plan);
  return document(std::move(j));
}

std::string expert_choice_to_csv(const ExpertChoice& choice) {
  std::string row = plan_row(choice.plan);
  row.pop_back();
  return kPlanColumns + ",at_largest_candidate\n" + row +
         (choice.at_largest_candidate ? ",true\n" : ",false\n");
}

std::string isoflop_to_json(double flops, double experts, const std::vector<IsoflopPoint>& points) {
  ordered_json j;
  j["flops"] = flops;
  j["experts"] = experts;
  ordered_json rows = ordered_json::array();
  for (const auto& p : points) {
    rows.push_back({{"tokens", number(p.tokens)},
                    {"n_act", number(p.n_act)},
                    {"n_total", number(p.n_total)},
                    {"loss", number(p.loss)},
                    {"memory_bytes", number(p.memory_bytes)}});
  }
  j["points"] = std::move(rows);
  return document(std::move(j));
}

std::string isoflop_to_csv(const std::vector<IsoflopPoint>& points) {
  std::string out = "tokens,n_act,n_total,loss,memory_bytes\n";
  for (const auto& p : points) {
    out += format_double(p.tokens) + ',' + format_double(p.n_act) + ',' + format_double(p.n_total) +
           ',' + format_double(p.loss) + ',' + format_double(p.memory_bytes) + '\n';
  }
  return out;
}

std::string savings_to_json(const std::vector<SavingsPoint>& points) {
  ordered_json rows = ordered_json::array();
  for (const auto& p : points) {
    rows.push_back({{"flops", p.flops}, {"experts", p.experts}, {"savings", number(p.savings)}});
  }
  ordered_json j;
  j["points"] = std::move(rows);
  return document(std::move(j));
}

std::string savings_to_csv(const std::vector<SavingsPoint>& points) {
  std::string out = "flops,experts,savings\n";
  for (const auto& p : points) {
    out += format_double(p.flops) + ',' + std::to_string(p.experts) + ',' +
           format_double(p.savings) + '\n';
  }
  return out;
}

std::string rule_of_thumb_to_json(const RuleOfThumbResult& r) {
  ordered_json j;
  j["n_total"] = r.n_total;
  j["experts"] = r.experts;
  j["dense"] = {{"n_act", r.n_act_dense}, {"tokens", r.tokens_dense}, {"loss", r.loss_dense}};
  j["moe"] = {{"n_act", r.n_act_moe}, {"tokens", r.tokens_moe}, {"loss", r.loss_moe}};
  j["verdict"] = std::string(to_string(r.verdict));
  j["outside_guaranteed_regime"] = r.outside_guaranteed_regime;
  return document(std::move(j));
}

std::string rule_of_thumb_to_csv(const RuleOfThumbResult& r) {
  return "n_total,experts,n_act_dense,tokens_dense,loss_dense,n_act_moe,tokens_moe,loss_moe,"
         "verdict,outside_guaranteed_regime\n" +
         format_double(r.n_total) + ',' + std::to_string(r.experts) + ',' +
         format_double(r.n_act_dense) + ',' + format_double(r.tokens_dense) + ',' +
         format_double(r.loss_dense) + ',' + format_double(r.n_act_moe) + ',' +
         format_double(r.tokens_moe) + ',' + format_double(r.loss_moe) + ',' +
         std::string(to_string(r.verdict)) + ',' + (r.outside_guaranteed_regime ? "true" : "false") +
         '\n';
}

}  // namespace moescale
