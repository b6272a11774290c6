#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "kinfrac/audit.hpp"
#include "kinfrac/dtn.hpp"
#include "kinfrac/fractional.hpp"
#include "kinfrac/harness.hpp"
#include "kinfrac/quadrature.hpp"
#include "kinfrac/scattering.hpp"

namespace py = pybind11;
using namespace kinfrac;

namespace {

py::dict record_dict(const SigmaRecord& r) {
  py::dict d;
  d["sigma"] = r.sigma;
  d["albedo"] = r.albedo;
  d["err_trace_l2"] = r.err_trace_l2;
  d["err_trace_sup"] = r.err_trace_sup;
  d["err_current_l2"] = r.err_current_l2;
  d["max_principle_margin"] = r.max_principle_margin;
  d["entropy_violations"] = r.entropy_violations;
  d["seconds_per_solve"] = r.seconds_per_solve;
  d["err_trace_halfrange_l2"] = r.err_trace_halfrange_l2;
  d["err_trace_l2_rule_cstar"] = r.err_trace_l2_rule_cstar;
  d["flux_identity_residual"] = r.flux_identity_residual;
  d["k0_error"] = r.k0_error;
  d["truncation_change"] = r.truncation_change;
  d["pressure_limit_l2"] = r.pressure_limit_l2;
  d["pressure_balance_residual"] = r.pressure_balance_residual;
  d["trace_x"] = r.trace_x;
  d["trace_transport"] = r.trace_transport;
  d["trace_fractional"] = r.trace_fractional;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Kinetic transport to fractional diffusion: numerical core";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<Quadrature>(m, "Quadrature")
      .def_property_readonly("dimension", &Quadrature::dimension)
      .def_property_readonly("size", &Quadrature::size)
      .def_property_readonly("nodes", &Quadrature::nodes)
      .def_property_readonly("weights", &Quadrature::weights)
      .def_property_readonly("sphere_measure", &Quadrature::sphere_measure)
      .def_property_readonly("half_measure", &Quadrature::half_measure);
  m.def("build_quadrature", &build_quadrature, py::arg("d"), py::arg("n"));

  py::class_<ScatteringKernel>(m, "ScatteringKernel")
      .def_property_readonly("phase", &ScatteringKernel::phase)
      .def_property_readonly("gain", &ScatteringKernel::gain)
      .def("normalization_defect", &ScatteringKernel::normalization_defect);
  m.def(
      "build_kernel",
      [](const Quadrature& q, const std::string& kind, std::vector<double> coefficients) {
        return build_kernel(q, {kernel_kind_from_string(kind), std::move(coefficients)});
      },
      py::arg("quadrature"), py::arg("kind") = "isotropic", py::arg("coefficients") = std::vector<double>{});
  m.def("apply_L", py::overload_cast<const ScatteringKernel&, const Eigen::VectorXd&>(&apply_L));

  py::class_<OmegaSolution>(m, "OmegaSolution")
      .def_readonly("omega_field", &OmegaSolution::omega_field)
      .def_readonly("transport_coeff", &OmegaSolution::transport_coeff)
      .def_readonly("gap", &OmegaSolution::gap)
      .def_readonly("residual", &OmegaSolution::residual);
  m.def("solve_omega", &solve_omega);

  m.def("c_gamma", &c_gamma);
  m.def("c_star", &c_star, py::arg("kappa"), py::arg("transport_coeff"), py::arg("d"));
  m.def(
      "solve_fracdiff",
      [](int d, double gamma, double cstar, std::vector<ModeIndex> modes,
         std::vector<std::complex<double>> source) {
        return solve_fracdiff({d, gamma, cstar, std::move(modes), std::move(source)});
      },
      py::arg("d"), py::arg("gamma"), py::arg("c_star"), py::arg("modes"), py::arg("source_hat"));
  m.def(
      "extension_neumann",
      [](double gamma, int k, int cells) {
        ExtensionOptions o;
        o.cells = cells;
        return extension_pde_neumann(gamma, {k, 0}, o).neumann_at_0;
      },
      py::arg("gamma"), py::arg("k"), py::arg("cells") = 2000);

  m.def("alpha_plus", &alpha_plus);
  m.def("alpha_minus", &alpha_minus);
  m.def("shooting_log_derivative", &shooting_log_derivative, py::arg("d"), py::arg("n"),
        py::arg("steps") = 4000);

  m.def(
      "audit_operator",
      [](int d, int n, const std::string& kind) {
        const OperatorAudit a = audit_operator(d, n, {kernel_kind_from_string(kind), {}});
        py::dict out;
        out["constant_defect"] = a.constant_defect;
        out["self_adjoint_defect"] = a.self_adjoint_defect;
        out["operator_norm"] = a.operator_norm;
        out["nullspace_dimension"] = a.nullspace_dimension;
        out["omega_error"] = a.omega_error;
        out["transport_coeff"] = a.transport_coeff;
        out["gap"] = a.gap;
        out["passed"] = a.operator_pass() && a.omega_pass();
        return out;
      },
      py::arg("d"), py::arg("n") = 16, py::arg("kind") = "isotropic");

  m.attr("RESULTS_HEADER") = kResultsHeader;
  m.def(
      "run_sweep",
      [](const std::string& config_json, const std::optional<std::filesystem::path>& out) {
        const Config c = parse_config_json(config_json);
        SweepReport r;
        {
          py::gil_scoped_release release;
          r = run_sweep(c);
        }
        if (out) {
          write_results_csv(r, *out / "results.csv");
          write_report_json(r, *out / "report.json");
          write_traces(r, *out);
        }
        py::list records;
        for (const auto& rec : r.records) records.append(record_dict(rec));
        py::dict d;
        d["transport_coeff"] = r.transport_coeff;
        d["c_star"] = r.c_star;
        d["observed_rate"] = observed_rate(r);
        d["records"] = records;
        return d;
      },
      py::arg("config_json") = "{}", py::arg("out") = py::none());
  m.def("config_to_json", [](const std::string& text) { return config_to_json(parse_config_json(text)); });
}
