// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "moescale/report.hpp"

using namespace moescale;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST_CASE("doubles print to round-trip precision") {
  for (double v : {0.1, 1e23, 2.666211719893291, 1.0 / 3.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(NAN) == "nan");
}

TEST_CASE("plan JSON and CSV carry the same values") {
  BudgetSpec b;
  b.train_flops = 1e22;
  b.memory_cap = 80e9;
  b.kv_tokens = 16384;
  const auto plan = memory_optimal(b, 16, default_coefficients());
  const auto j = nlohmann::json::parse(plan_to_json(plan));
  CHECK(j["schema_version"] == 1);
  CHECK(j["binding_constraint"] == "memory");

  std::stringstream csv(plan_to_csv(plan));
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  const auto names = split(header);
  const auto cells = split(row);
  REQUIRE(names.size() == cells.size());
  const std::map<std::string, std::string> json_key{{"loss", "predicted_loss"}};
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto key = json_key.count(names[i]) ? json_key.at(names[i]) : names[i];
    CAPTURE(key);
    if (j[key].is_string()) {
      CHECK(j[key].get<std::string>() == cells[i]);
    } else {
      CHECK(j[key].get<double>() == std::stod(cells[i]));
    }
  }
}

TEST_CASE("isoflop CSV rows follow the plot layout") {
  const auto pts = isoflop_curve(1e20, 4, log_spaced(1e9, 1e11, 5), default_coefficients());
  const auto text = isoflop_to_csv(pts);
  CHECK(text.rfind("tokens,n_act,n_total,loss,memory_bytes\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);
  const auto j = nlohmann::json::parse(isoflop_to_json(1e20, 4, pts));
  CHECK(j["points"].size() == 5);
  CHECK(j["points"][2]["loss"].get<double>() == pts[2].loss);
}

TEST_CASE("non-finite values become null in JSON") {
  const std::vector<SavingsPoint> pts{{1e20, 8, NAN}};
  const auto j = nlohmann::json::parse(savings_to_json(pts));
  CHECK(j["points"][0]["savings"].is_null());
  CHECK(savings_to_csv(pts) == "flops,experts,savings\n1e+20,8,nan\n");
}
