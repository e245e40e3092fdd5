// SPDX-License-Identifier: Apache-2.0
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "moescale/accounting.hpp"
#include "moescale/dataio.hpp"
#include "moescale/error.hpp"
#include "moescale/fitting.hpp"
#include "moescale/law.hpp"
#include "moescale/planner.hpp"
#include "moescale/report.hpp"

namespace py = pybind11;
using namespace moescale;

namespace {

RunFormat format_from(const std::string& name) {
  if (name == "csv") return RunFormat::Csv;
  if (name == "json") return RunFormat::Json;
  throw py::value_error("format must be 'csv' or 'json'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Expert-count-aware scaling law: evaluation, fitting and planning";

  static py::exception<Error> error(m, "MoeScaleError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<ScalingCoefficients>(m, "ScalingCoefficients")
      .def(py::init<>())
      .def_readwrite("a", &ScalingCoefficients::a)
      .def_readwrite("alpha", &ScalingCoefficients::alpha)
      .def_readwrite("delta", &ScalingCoefficients::delta)
      .def_readwrite("gamma", &ScalingCoefficients::gamma)
      .def_readwrite("b", &ScalingCoefficients::b)
      .def_readwrite("beta", &ScalingCoefficients::beta)
      .def_readwrite("omega", &ScalingCoefficients::omega)
      .def_readwrite("zeta", &ScalingCoefficients::zeta)
      .def_readwrite("e_start", &ScalingCoefficients::e_start)
      .def_readwrite("e_max", &ScalingCoefficients::e_max)
      .def_readwrite("c", &ScalingCoefficients::c)
      .def("to_json", &coefficients_to_json)
      .def_static("from_json", &coefficients_from_json)
      .def(py::self == py::self)
      .def("__repr__", &coefficients_to_json);

  py::class_<ChinchillaCoefficients>(m, "ChinchillaCoefficients")
      .def_readonly("m", &ChinchillaCoefficients::m)
      .def_readonly("mu", &ChinchillaCoefficients::mu)
      .def_readonly("n", &ChinchillaCoefficients::n)
      .def_readonly("nu", &ChinchillaCoefficients::nu)
      .def_readonly("c", &ChinchillaCoefficients::c);

  m.def("default_coefficients", &default_coefficients);
  m.def("e_hat", &e_hat, py::arg("experts"), py::arg("coeffs") = default_coefficients());
  m.def("loss", &loss, py::arg("n_act"), py::arg("tokens"), py::arg("experts"),
        py::arg("coeffs") = default_coefficients());
  m.def("reduce_to_chinchilla", &reduce_to_chinchilla, py::arg("coeffs"), py::arg("experts"));
  m.def(
      "peak_learning_rate",
      [](double n, double e) { return peak_learning_rate(n, e); }, py::arg("n_act_nonemb"),
      py::arg("experts"));

  py::class_<ModelShape>(m, "ModelShape")
      .def_static("standard", &ModelShape::standard, py::arg("d_model"), py::arg("experts") = 1)
      .def_readonly("d_model", &ModelShape::d_model)
      .def_readonly("n_blocks", &ModelShape::n_blocks)
      .def_readonly("n_heads", &ModelShape::n_heads)
      .def_readonly("experts", &ModelShape::experts);
  m.def("active_params", [](const ModelShape& s) { return active_params(s); });
  m.def("total_params", [](const ModelShape& s) { return total_params(s); });
  m.def("training_flops", &training_flops);

  py::class_<RunRecord>(m, "RunRecord")
      .def_readonly("n_act", &RunRecord::n_act)
      .def_readonly("n_total", &RunRecord::n_total)
      .def_readonly("experts", &RunRecord::experts)
      .def_readonly("tokens", &RunRecord::tokens)
      .def_readonly("observed_loss", &RunRecord::observed_loss);
  m.def("bundled_experiment_grid", &bundled_experiment_grid);
  m.def("synthesize", &synthesize, py::arg("grid"), py::arg("coeffs"), py::arg("noise_sigma"),
        py::arg("seed"));
  m.def(
      "parse_runs", [](const std::string& text, const std::string& fmt) {
        return parse_runs(text, format_from(fmt));
      },
      py::arg("text"), py::arg("format") = "csv");
  m.def(
      "serialize_runs",
      [](const std::vector<RunRecord>& runs, const std::string& fmt) {
        return serialize_runs(runs, format_from(fmt));
      },
      py::arg("runs"), py::arg("format") = "csv");

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("coefficients", &FitReport::coefficients)
      .def_readonly("rmse_train", &FitReport::rmse_train)
      .def_readonly("rmse_val", &FitReport::rmse_val)
      .def_readonly("converged", &FitReport::converged)
      .def("to_json", &fit_report_to_json);
  m.def(
      "fit",
      [](const std::vector<RunRecord>& runs, std::size_t grid_sample, std::uint64_t seed) {
        FitConfig config;
        config.grid_sample = grid_sample;
        config.seed = seed;
        py::gil_scoped_release release;
        return fit(runs, config);
      },
      py::arg("runs"), py::arg("grid_sample") = 0, py::arg("seed") = 0);

  py::enum_<BindingConstraint>(m, "BindingConstraint")
      .value("COMPUTE", BindingConstraint::Compute)
      .value("MEMORY", BindingConstraint::Memory)
      .value("NONE", BindingConstraint::None);

  py::class_<BudgetSpec>(m, "BudgetSpec")
      .def(py::init<>())
      .def_readwrite("train_flops", &BudgetSpec::train_flops)
      .def_readwrite("inference_tokens", &BudgetSpec::inference_tokens)
      .def_readwrite("memory_cap", &BudgetSpec::memory_cap)
      .def_readwrite("kv_tokens", &BudgetSpec::kv_tokens)
      .def_readwrite("bytes_per_element", &BudgetSpec::bytes_per_element)
      .def_readwrite("expert_choices", &BudgetSpec::expert_choices);

  py::class_<PlanResult>(m, "PlanResult")
      .def_readonly("experts", &PlanResult::experts)
      .def_readonly("n_act", &PlanResult::n_act)
      .def_readonly("n_total", &PlanResult::n_total)
      .def_readonly("tokens", &PlanResult::tokens)
      .def_readonly("predicted_loss", &PlanResult::predicted_loss)
      .def_readonly("memory_bytes", &PlanResult::memory_bytes)
      .def_readonly("flops_train", &PlanResult::flops_train)
      .def_readonly("flops_inference", &PlanResult::flops_inference)
      .def_readonly("binding", &PlanResult::binding)
      .def("to_json", &plan_to_json);

  py::class_<ExpertChoice>(m, "ExpertChoice")
      .def_readonly("experts", &ExpertChoice::experts)
      .def_readonly("plan", &ExpertChoice::plan)
      .def_readonly("at_largest_candidate", &ExpertChoice::at_largest_candidate);

  m.def(
      "compute_optimal",
      [](double flops, double experts, const ScalingCoefficients& k) {
        auto opt = compute_optimal(flops, experts, k);
        return py::make_tuple(opt.n_act, opt.tokens);
      },
      py::arg("flops"), py::arg("experts"), py::arg("coeffs") = default_coefficients());
  m.def("memory_optimal", &memory_optimal, py::arg("budget"), py::arg("experts"),
        py::arg("coeffs") = default_coefficients());
  m.def("inference_optimal", &inference_optimal, py::arg("budget"), py::arg("experts"),
        py::arg("coeffs") = default_coefficients());
  m.def("optimal_experts", &optimal_experts, py::arg("budget"),
        py::arg("coeffs") = default_coefficients());
  m.def("flops_savings", &flops_savings, py::arg("flops"), py::arg("experts"),
        py::arg("coeffs") = default_coefficients());

  py::enum_<Verdict>(m, "Verdict")
      .value("MOE_WINS", Verdict::MoeWins)
      .value("DENSE_WINS", Verdict::DenseWins)
      .value("TIE", Verdict::Tie);

  py::class_<RuleOfThumbResult>(m, "RuleOfThumbResult")
      .def_readonly("loss_dense", &RuleOfThumbResult::loss_dense)
      .def_readonly("loss_moe", &RuleOfThumbResult::loss_moe)
      .def_readonly("n_act_moe", &RuleOfThumbResult::n_act_moe)
      .def_readonly("tokens_dense", &RuleOfThumbResult::tokens_dense)
      .def_readonly("tokens_moe", &RuleOfThumbResult::tokens_moe)
      .def_readonly("verdict", &RuleOfThumbResult::verdict)
      .def_readonly("outside_guaranteed_regime", &RuleOfThumbResult::outside_guaranteed_regime);
  m.def(
      "rule_of_thumb",
      [](double n_total, Count experts, std::optional<double> dense_tokens, bool compute_matched,
         const ScalingCoefficients& k) {
        return rule_of_thumb_compare(
            n_total, experts, k, dense_tokens,
            compute_matched ? TokenMatching::ComputeMatched : TokenMatching::ExpertMultiple);
      },
      py::arg("n_total"), py::arg("experts") = 4, py::arg("dense_tokens") = py::none(),
      py::arg("compute_matched") = false, py::arg("coeffs") = default_coefficients());
}
