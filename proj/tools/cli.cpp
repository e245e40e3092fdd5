// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "moescale/dataio.hpp"
#include "moescale/error.hpp"
#include "moescale/fitting.hpp"
#include "moescale/law.hpp"
#include "moescale/planner.hpp"
#include "moescale/report.hpp"

namespace moescale::cli {
namespace {

using ordered_json = nlohmann::ordered_json;

// Bad paths and argument values are usage errors, not domain errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

RunFormat format_for_path(const std::string& path) {
  const auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == "json" ? RunFormat::Json : RunFormat::Csv;
}

std::string doc(ordered_json body) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  for (auto& [key, value] : body.items()) j[key] = value;
  return j.dump(2) + '\n';
}

struct Globals {
  std::string coefficients_path;
  std::string format = "json";

  bool csv() const { return format == "csv"; }

  ScalingCoefficients coefficients() const {
    std::string path = coefficients_path;
    if (path.empty()) {
      if (const char* env = std::getenv(kCoefficientsEnv); env && *env) path = env;
    }
    if (path.empty()) return default_coefficients();
    auto coeffs = coefficients_from_json(read_file(path));
    coeffs.validate();
    return coeffs;
  }
};

struct BudgetOptions {
  double flops = 0.0;
  std::string memory;
  double kv_tokens = 0.0;
  double bytes_per_element = 2.0;
  double inference_tokens = 0.0;

  void add(CLI::App* cmd, bool with_memory, bool with_inference) {
    cmd->add_option("--flops", flops, "Training FLOP budget F")->required();
    if (with_memory) {
      cmd->add_option("--memory", memory, "Memory cap, e.g. 80GB or 80GiB");
      cmd->add_option("--kv-tokens", kv_tokens, "Tokens held in the KV cache");
      cmd->add_option("--bytes-per-element", bytes_per_element, "Bytes per stored element")
          ->check(CLI::IsMember({1.0, 2.0, 4.0, 8.0}));
    }
    if (with_inference) {
      cmd->add_option("--inference-tokens", inference_tokens, "Tokens served at inference");
    }
  }

  BudgetSpec spec() const {
    BudgetSpec b;
    b.train_flops = flops;
    if (!memory.empty()) b.memory_cap = parse_memory(memory);
    b.kv_tokens = kv_tokens;
    b.bytes_per_element = bytes_per_element;
    b.inference_tokens = inference_tokens;
    return b;
  }
};

}  // namespace

double parse_memory(const std::string& text) {
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw UsageError("invalid memory size '" + text + "'");
  }
  std::string unit = text.substr(pos);
  unit.erase(std::remove_if(unit.begin(), unit.end(), [](unsigned char c) { return std::isspace(c); }),
             unit.end());
  std::transform(unit.begin(), unit.end(), unit.begin(), [](unsigned char c) { return std::tolower(c); });
  static const std::pair<const char*, double> kUnits[] = {
      {"", 1.0},        {"b", 1.0},
      {"kb", 1e3},      {"mb", 1e6},        {"gb", 1e9},          {"tb", 1e12},
      {"kib", 1024.0},  {"mib", 1048576.0}, {"gib", 1073741824.0}, {"tib", 1099511627776.0},
  };
  for (const auto& [name, scale] : kUnits) {
    if (unit == name) {
      const double bytes = value * scale;
      if (!(bytes > 0.0) || !std::isfinite(bytes)) throw UsageError("memory must be positive");
      return bytes;
    }
  }
  throw UsageError("unknown memory unit in '" + text + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scaling-law evaluation, fitting and planning for dense and MoE models", "moescale"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--coefficients", g.coefficients_path,
                 std::string("Coefficients JSON (default: bundled set, or $") + kCoefficientsEnv + ")");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  std::function<void()> action;

  // eval
  double eval_n = 0.0, eval_d = 0.0, eval_e = 1.0;
  auto* eval = app.add_subcommand("eval", "Evaluate the joint law at (N, D, E)");
  eval->add_option("--n-act", eval_n, "Active parameters")->required();
  eval->add_option("--tokens", eval_d, "Training tokens")->required();
  eval->add_option("--experts", eval_e, "Expert count");
  eval->callback([&] {
    action = [&] {
      const auto k = g.coefficients();
      const double l = loss(eval_n, eval_d, eval_e, k);
      const double eh = e_hat(eval_e, k);
      if (g.csv()) {
        out << "n_act,tokens,experts,e_hat,loss\n"
            << format_double(eval_n) << ',' << format_double(eval_d) << ',' << format_double(eval_e)
            << ',' << format_double(eh) << ',' << format_double(l) << '\n';
      } else {
        out << doc({{"n_act", eval_n}, {"tokens", eval_d}, {"experts", eval_e}, {"e_hat", eh}, {"loss", l}});
      }
    };
  });

  // reduce
  std::vector<double> reduce_e{1, 2, 4, 8, 16, 32};
  auto* reduce = app.add_subcommand("reduce", "Per-E Chinchilla coefficients of the joint law");
  reduce->add_option("--experts", reduce_e, "Expert counts")->expected(1, -1);
  reduce->callback([&] {
    action = [&] {
      const auto k = g.coefficients();
      if (g.csv()) out << "experts,m,mu,n,nu,c\n";
      ordered_json rows = ordered_json::array();
      for (double e : reduce_e) {
        const auto r = reduce_to_chinchilla(k, e);
        if (g.csv()) {
          out << format_double(e) << ',' << format_double(r.m) << ',' << format_double(r.mu) << ','
              << format_double(r.n) << ',' << format_double(r.nu) << ',' << format_double(r.c) << '\n';
        } else {
          rows.push_back({{"experts", e}, {"m", r.m}, {"mu", r.mu}, {"n", r.n}, {"nu", r.nu}, {"c", r.c}});
        }
      }
      if (!g.csv()) out << doc({{"rows", rows}});
    };
  });

  // lr
  double lr_n = 0.0, lr_e = 1.0;
  auto* lr = app.add_subcommand("lr", "Peak learning rate from the power-law rule");
  lr->add_option("--n-act-nonemb", lr_n, "Active non-embedding parameters")->required();
  lr->add_option("--experts", lr_e, "Expert count");
  lr->callback([&] {
    action = [&] {
      const double value = peak_learning_rate(lr_n, lr_e);
      if (g.csv()) {
        out << "n_act_nonemb,experts,learning_rate\n"
            << format_double(lr_n) << ',' << format_double(lr_e) << ',' << format_double(value) << '\n';
      } else {
        out << doc({{"n_act_nonemb", lr_n}, {"experts", lr_e}, {"learning_rate", value}});
      }
    };
  });

  // fit
  std::string fit_runs, fit_save;
  std::uint64_t fit_seed = 0;
  std::size_t fit_sample = 0, fit_val = 30;
  unsigned fit_threads = 0;
  auto* fitc = app.add_subcommand("fit", "Fit the joint law to run records");
  fitc->add_option("--runs", fit_runs, "Run records (.csv or .json) with a loss column")->required();
  fitc->add_option("--seed", fit_seed, "Seed for grid subsampling");
  fitc->add_option("--grid-sample", fit_sample, "Minimize from this many random grid seeds (0 = all)");
  fitc->add_option("--validation-size", fit_val, "Lowest-loss records held out");
  fitc->add_option("--threads", fit_threads, "Worker threads (0 = hardware concurrency)");
  fitc->add_option("--save-coefficients", fit_save, "Also write the fitted coefficients here");
  fitc->callback([&] {
    action = [&] {
      const auto records = parse_runs(read_file(fit_runs), format_for_path(fit_runs));
      FitConfig config;
      config.seed = fit_seed;
      config.grid_sample = fit_sample;
      config.validation_size = fit_val;
      config.threads = fit_threads;
      const auto report = fit(records, config);
      if (!fit_save.empty()) write_file(fit_save, coefficients_to_json(report.coefficients) + "\n");
      if (g.csv()) {
        const auto& c = report.coefficients;
        out << "a,alpha,delta,gamma,b,beta,omega,zeta,e_start,e_max,c,rmse_train,rmse_val\n";
        for (double v : {c.a, c.alpha, c.delta, c.gamma, c.b, c.beta, c.omega, c.zeta, c.e_start,
                         c.e_max, c.c, report.rmse_train}) {
          out << format_double(v) << ',';
        }
        out << format_double(report.rmse_val) << '\n';
      } else {
        out << fit_report_to_json(report) << '\n';
      }
    };
  });

  // plan-compute
  double pc_flops = 0.0;
  Count pc_e = 1;
  auto* pc = app.add_subcommand("plan-compute", "Compute-optimal (N, D) for a FLOP budget");
  pc->add_option("--flops", pc_flops, "Training FLOP budget F")->required();
  pc->add_option("--experts", pc_e, "Expert count")->check(CLI::PositiveNumber);
  pc->callback([&] {
    action = [&] {
      BudgetSpec b;
      b.train_flops = pc_flops;
      const auto plan = memory_optimal(b, pc_e, g.coefficients());
      out << (g.csv() ? plan_to_csv(plan) : plan_to_json(plan));
    };
  });

  // plan-memory
  BudgetOptions pm_budget;
  Count pm_e = 1;
  auto* pm = app.add_subcommand("plan-memory", "Compute-optimal model under a memory cap");
  pm_budget.add(pm, true, false);
  pm->get_option("--memory")->required();
  pm->add_option("--experts", pm_e, "Expert count")->check(CLI::PositiveNumber);
  pm->callback([&] {
    action = [&] {
      const auto plan = memory_optimal(pm_budget.spec(), pm_e, g.coefficients());
      out << (g.csv() ? plan_to_csv(plan) : plan_to_json(plan));
    };
  });

  // plan-inference
  BudgetOptions pi_budget;
  Count pi_e = 1;
  auto* pi = app.add_subcommand("plan-inference", "Shared training and inference FLOP budget");
  pi_budget.add(pi, true, true);
  pi->get_option("--inference-tokens")->required();
  pi->add_option("--experts", pi_e, "Expert count")->check(CLI::PositiveNumber);
  pi->callback([&] {
    action = [&] {
      const auto plan = inference_optimal(pi_budget.spec(), pi_e, g.coefficients());
      out << (g.csv() ? plan_to_csv(plan) : plan_to_json(plan));
    };
  });

  // optimal-experts
  BudgetOptions oe_budget;
  std::vector<Count> oe_candidates{1, 2, 4, 8, 16, 32};
  auto* oe = app.add_subcommand("optimal-experts", "Loss-minimizing expert count for a budget");
  oe_budget.add(oe, true, true);
  oe->add_option("--candidates", oe_candidates, "Expert counts to compare")
      ->expected(1, -1)
      ->check(CLI::PositiveNumber);
  oe->callback([&] {
    action = [&] {
      auto b = oe_budget.spec();
      b.expert_choices = oe_candidates;
      const auto choice = optimal_experts(b, g.coefficients());
      out << (g.csv() ? expert_choice_to_csv(choice) : expert_choice_to_json(choice));
    };
  });

  // isoflop
  double iso_flops = 0.0, iso_e = 1.0, iso_kv = 0.0, iso_bytes = 2.0;
  std::optional<double> iso_lo, iso_hi;
  std::size_t iso_points = 61;
  auto* iso = app.add_subcommand("isoflop", "Loss along a fixed-FLOP curve");
  iso->add_option("--flops", iso_flops, "Training FLOP budget F")->required();
  iso->add_option("--experts", iso_e, "Expert count");
  iso->add_option("--tokens-min", iso_lo, "Smallest token count (default D_opt / 100)");
  iso->add_option("--tokens-max", iso_hi, "Largest token count (default D_opt * 100)");
  iso->add_option("--points", iso_points, "Log-spaced grid points")->check(CLI::PositiveNumber);
  iso->add_option("--kv-tokens", iso_kv, "Tokens held in the KV cache for memory_bytes");
  iso->add_option("--bytes-per-element", iso_bytes, "Bytes per stored element")
      ->check(CLI::IsMember({1.0, 2.0, 4.0, 8.0}));
  iso->callback([&] {
    action = [&] {
      const auto k = g.coefficients();
      const double d_opt = compute_optimal(iso_flops, iso_e, k).tokens;
      const auto grid = log_spaced(iso_lo.value_or(d_opt / 100.0), iso_hi.value_or(d_opt * 100.0), iso_points);
      const auto points = isoflop_curve(iso_flops, iso_e, grid, k, iso_kv, iso_bytes);
      out << (g.csv() ? isoflop_to_csv(points) : isoflop_to_json(iso_flops, iso_e, points));
    };
  });

  // savings
  std::vector<double> sv_flops;
  std::vector<Count> sv_e{2, 4, 8, 16, 32};
  auto* sv = app.add_subcommand("savings", "FLOP savings of compute-optimal MoE over dense");
  sv->add_option("--flops", sv_flops, "Budgets F")->required()->expected(1, -1);
  sv->add_option("--experts", sv_e, "Expert counts")->expected(1, -1)->check(CLI::PositiveNumber);
  sv->callback([&] {
    action = [&] {
      const auto k = g.coefficients();
      const bool single = sv_flops.size() == 1 && sv_e.size() == 1;
      std::vector<SavingsPoint> points;
      for (double f : sv_flops) {
        for (Count e : sv_e) {
          double s = std::nan("");
          try {
            s = flops_savings(f, static_cast<double>(e), k);
          } catch (const Error& ex) {
            // A grid of budgets reports a gap; a single query fails loudly.
            if (single || ex.kind() != ErrorKind::NoCrossing) throw;
          }
          points.push_back({f, e, s});
        }
      }
      out << (g.csv() ? savings_to_csv(points) : savings_to_json(points));
    };
  });

  // rule-of-thumb
  double rt_total = 0.0;
  Count rt_e = 4;
  std::optional<double> rt_tokens;
  bool rt_matched = false;
  auto* rt = app.add_subcommand("rule-of-thumb", "Dense model vs memory-matched MoE");
  rt->add_option("--n-total", rt_total, "Total parameters of both models")->required();
  rt->add_option("--experts", rt_e, "MoE expert count")->check(CLI::PositiveNumber);
  rt->add_option("--dense-tokens", rt_tokens, "Dense training tokens (default: compute-optimal)");
  rt->add_flag("--compute-matched", rt_matched, "Match training FLOPs instead of E x tokens");
  rt->callback([&] {
    action = [&] {
      const auto r = rule_of_thumb_compare(
          rt_total, rt_e, g.coefficients(), rt_tokens,
          rt_matched ? TokenMatching::ComputeMatched : TokenMatching::ExpertMultiple);
      out << (g.csv() ? rule_of_thumb_to_csv(r) : rule_of_thumb_to_json(r));
    };
  });

  // synth
  std::string sy_grid;
  double sy_sigma = 0.0;
  std::uint64_t sy_seed = 0;
  auto* sy = app.add_subcommand("synth", "Draw synthetic losses from the law");
  sy->add_option("--grid", sy_grid, "Run grid (.csv or .json); default: bundled experiment grid");
  sy->add_option("--sigma", sy_sigma, "Log-loss noise standard deviation")->check(CLI::NonNegativeNumber);
  sy->add_option("--seed", sy_seed, "Noise seed");
  sy->callback([&] {
    action = [&] {
      const auto grid = sy_grid.empty() ? bundled_experiment_grid()
                                        : parse_runs(read_file(sy_grid), format_for_path(sy_grid));
      const auto runs = synthesize(grid, g.coefficients(), sy_sigma, sy_seed);
      out << serialize_runs(runs, g.csv() ? RunFormat::Csv : RunFormat::Json);
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (action) action();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

}  // namespace moescale::cli
