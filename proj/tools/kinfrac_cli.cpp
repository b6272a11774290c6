#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kinfrac/audit.hpp"
#include "kinfrac/dtn.hpp"
#include "kinfrac/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<int> threads;
  bool si_units = false;
};

kinfrac::Config load(const Common& o) {
  kinfrac::Config c = o.config.empty() ? kinfrac::Config{} : kinfrac::load_config(o.config);
  if (o.threads) {
    if (*o.threads < 1) throw kinfrac::ConfigError("--threads: must be >= 1");
    c.threads = *o.threads;
  }
  if (o.si_units) c.si_units = true;
  return c;
}

std::ofstream open(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw kinfrac::InvalidArgument(p.string() + ": cannot open for writing");
  return f;
}

int cmd_sweep(const Common& o) {
  const kinfrac::Config c = load(o);
  const fs::path out = o.out;
  const auto r = kinfrac::run_sweep(c);
  kinfrac::write_results_csv(r, out / "results.csv");
  kinfrac::write_report_json(r, out / "report.json");
  kinfrac::write_traces(r, out);
  std::printf("%-8s %-12s %-12s %-12s %-12s %s\n", "sigma", "err_trace", "ratio", "err_current", "margin",
              "seconds");
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& s = r.records[i];
    const double ratio = i ? s.err_trace_l2 / r.records[i - 1].err_trace_l2 : NAN;
    std::printf("%-8g %-12.4e %-12.3f %-12.4e %-12.3e %.3f\n", s.sigma, s.err_trace_l2, ratio,
                s.err_current_l2, s.max_principle_margin, s.seconds_per_solve);
  }
  std::printf("observed rate %.3f, total %.1f s, written to %s\n", kinfrac::observed_rate(r),
              r.total_seconds, out.c_str());
  return 0;
}

int cmd_frac(const Common& o) {
  const auto r = kinfrac::run_fractional(load(o));
  kinfrac::write_fractional(r, o.out);
  std::printf("c_star %.12g, %zu modes, robin agreement %.3e\n", r.problem.c_star, r.problem.modes.size(),
              r.robin_agreement);
  return 0;
}

int cmd_ext(const Common& o) {
  const auto rows = kinfrac::run_extension_check(load(o));
  kinfrac::write_extension(rows, o.out);
  for (const auto& r : rows)
    std::printf("gamma %-4g k %d  -F'(0) %.8f  (2 pi k)^gamma %.8f  rel %.2e\n", r.gamma, r.k, r.neumann,
                r.multiplier, r.rel_error);
  return 0;
}

int cmd_dtn(const Common& o) {
  const kinfrac::Config c = load(o);
  json tables = json::array();
  std::ofstream csv = open(fs::path(o.out) / "dtn.csv");
  csv << "d,n,lambda,alpha_plus,alpha_minus,sqrt_lambda,gap,shooting\n";
  csv.precision(17);
  for (int d : c.dtn.dimensions) {
    const auto t = kinfrac::dtn_compare(d, c.dtn.n_max, c.dtn.shoot_max);
    json rows = json::array();
    for (const auto& r : t.rows) {
      csv << d << ',' << r.n << ',' << r.lambda << ',' << r.alpha_plus << ',' << r.alpha_minus << ','
          << r.sqrt_lambda << ',' << r.gap << ',';
      if (r.shooting_checked) csv << r.shooting;
      csv << "\n";
      rows.push_back({{"n", r.n}, {"lambda", r.lambda}, {"alpha_plus", r.alpha_plus},
                      {"alpha_minus", r.alpha_minus}, {"sqrt_lambda", r.sqrt_lambda}, {"gap", r.gap},
                      {"shooting", r.shooting_checked ? json(r.shooting) : json(nullptr)}});
      std::printf("d=%d n=%d  alpha+ %.6f  sqrt(lambda) %.6f  gap %.6f%s\n", d, r.n, r.alpha_plus,
                  r.sqrt_lambda, r.gap,
                  r.shooting_checked ? ("  shooting " + std::to_string(r.shooting)).c_str() : "");
    }
    tables.push_back({{"d", d}, {"rows", rows}});
  }
  open(fs::path(o.out) / "dtn.json") << tables.dump(2) << "\n";
  return 0;
}

int cmd_audit(const Common& o) {
  const kinfrac::Config c = load(o);
  json out = json::array();
  bool ok = true;
  for (const auto& k : c.audit.kernels) {
    const auto a = kinfrac::audit_operator(k.dimension, c.audit.n, k.spec, c.audit.seed);
    ok = ok && a.operator_pass() && a.omega_pass();
    out.push_back({{"dimension", a.dimension}, {"n", a.n}, {"kernel", a.kernel},
                   {"directions", a.directions}, {"constant_defect", a.constant_defect},
                   {"self_adjoint_defect", a.self_adjoint_defect}, {"operator_norm", a.operator_norm},
                   {"nullspace_dimension", a.nullspace_dimension},
                   {"null_vector_defect", a.null_vector_defect},
                   {"normalization_defect", a.normalization_defect}, {"omega_error", a.omega_error},
                   {"transport_coeff", a.transport_coeff},
                   {"transport_coeff_error", a.transport_coeff_error},
                   {"isotropy_defect", a.isotropy_defect}, {"gap", a.gap},
                   {"pseudoinverse_error", a.pseudoinverse_error},
                   {"dirichlet_defect", a.dirichlet_defect},
                   {"coercivity_margin", a.coercivity_margin}, {"seconds", a.seconds},
                   {"operator_pass", a.operator_pass()}, {"omega_pass", a.omega_pass()}});
    std::printf("%-16s d=%d  L1 %.1e  adj %.1e  |L| %.6f  null %d  Omega %.1e  tc %.12f  gap %.6f  %s\n",
                a.kernel.c_str(), a.dimension, a.constant_defect, a.self_adjoint_defect, a.operator_norm,
                a.nullspace_dimension, a.omega_error, a.transport_coeff, a.gap,
                a.operator_pass() && a.omega_pass() ? "ok" : "FAILED");
  }
  open(fs::path(o.out) / "audit.json") << out.dump(2) << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic-to-fractional diffusion limit solver"};
  app.require_subcommand(1);
  Common o;
  app.add_option("--config", o.config, "TOML or JSON configuration")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--threads", o.threads, "Worker threads for the mode solves");
  app.add_flag("--si-units", o.si_units, "Use SI physical constants for a T^4");

  int (*handler)(const Common&) = nullptr;
  auto add = [&](const char* name, const char* help, int (*fn)(const Common&)) {
    app.add_subcommand(name, help)->fallthrough()->callback([&handler, fn] { handler = fn; });
  };
  add("sweep", "Transport sweep over sigma against the fractional limit", cmd_sweep);
  add("solve-frac", "Fractional diffusion solve only", cmd_frac);
  add("ext-check", "Degenerate extension check of (2 pi |k|)^gamma", cmd_ext);
  add("dtn", "Dirichlet-to-Neumann exponents on the sphere", cmd_dtn);
  add("op-audit", "Scattering operator invariants", cmd_audit);

  CLI11_PARSE(app, argc, argv);
  try {
    return handler(o);
  } catch (const kinfrac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const kinfrac::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const kinfrac::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
