#include "kinfrac/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "kinfrac/measures.hpp"

namespace kinfrac {

using cplx = std::complex<double>;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Adds -k partners (as conjugates) and rejects data that cannot come from a real field.
SourceData close_under_negation(std::vector<ModeIndex> modes, std::vector<cplx> coeffs) {
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = i + 1; j < modes.size(); ++j)
      if (modes[i] == modes[j])
        throw ConfigError("source.modes: mode " + to_string(modes[i], 2) + " listed twice");
  const std::size_t given = modes.size();
  for (std::size_t i = 0; i < given; ++i) {
    const ModeIndex neg{-modes[i][0], -modes[i][1]};
    if (find_mode(modes, neg) < 0) {
      modes.push_back(neg);
      coeffs.push_back(std::conj(coeffs[i]));
    }
  }
  double scale = 0.0;
  for (const auto& c : coeffs) scale = std::max(scale, std::abs(c));
  if (conjugate_symmetry_defect(modes, coeffs) > 1e-12 * std::max(scale, 1.0))
    throw ConfigError("source.modes: coefficients of k and -k are not conjugate (S must be real)");
  // Lexicographic order keeps reports stable.
  std::vector<std::size_t> order(modes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return modes[a] < modes[b]; });
  SourceData out;
  for (std::size_t i : order) {
    out.modes.push_back(modes[i]);
    out.coeffs.push_back(coeffs[i]);
  }
  return out;
}

std::vector<double> synth(const std::vector<ModeIndex>& modes, const std::vector<cplx>& coeffs,
                          const std::vector<TorusPoint>& points) {
  return synthesize(modes, coeffs, points).values;
}

json complex_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::vector<cplx> temperature_to_source(int d, int n, std::span<const double> temperature,
                                        std::span<const ModeIndex> modes,
                                        const PhysicalConstants& constants, double sigma,
                                        double kappa) {
  std::size_t expected = static_cast<std::size_t>(n);
  if (d == 2) expected *= expected;
  if (temperature.size() != expected)
    throw InvalidArgument("temperature_to_source: expected " + std::to_string(expected) + " samples");
  std::vector<double> emission(temperature.size());
  for (std::size_t i = 0; i < temperature.size(); ++i) {
    const double t = temperature[i];
    if (!(t >= 0.0)) throw InvalidArgument("temperature_to_source: negative temperature at sample " + std::to_string(i));
    emission[i] = (1.0 + kappa * sigma) * constants.a * t * t * t * t;
  }
  return analyze(d, n, emission, modes);
}

SourceData resolve_source(const Config& c, double sigma) {
  const SourceSpec& s = c.source;
  switch (s.kind) {
    case SourceSpec::Kind::cosine: {
      if (s.k[0] == 0 && s.k[1] == 0) return {{{0, 0}}, {cplx(s.mean + s.amplitude)}};
      return close_under_negation({{0, 0}, s.k}, {cplx(s.mean), cplx(0.5 * s.amplitude)});
    }
    case SourceSpec::Kind::fourier:
      return close_under_negation(s.modes, s.coeffs);
    case SourceSpec::Kind::temperature: {
      const auto points = torus_grid(c.dimension, s.grid);
      std::vector<double> t = s.samples;
      if (t.empty()) {
        for (const auto& x : points) {
          const double arg = 2.0 * std::numbers::pi * (s.k[0] * x[0] + s.k[1] * x[1]);
          t.push_back(s.t0 * std::pow(1.0 + s.epsilon * std::cos(arg), 0.25));
        }
      }
      SourceData out;
      out.modes = symmetric_mode_set(c.dimension, s.kmax);
      out.coeffs = temperature_to_source(c.dimension, s.grid, t, out.modes, c.constants(), sigma, c.kappa);
      return out;
    }
  }
  throw ConfigError("source.kind: unsupported");
}

ErrorNorms error_norms(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("error_norms: length mismatch");
  if (a.empty()) throw InvalidArgument("error_norms: empty samples");
  ErrorNorms out;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = a[i] - b[i];
    acc += e * e;
    out.sup = std::max(out.sup, std::abs(e));
  }
  out.l2 = std::sqrt(acc / static_cast<double>(a.size()));
  return out;
}

namespace {

struct Evaluation {
  std::vector<double> trace;      // <f>(x, y_1)
  std::vector<double> halfrange;  // <<f>>_+(x, 0)
};

Evaluation evaluate_traces(const TransportProblem& p, const std::vector<ModeSolution>& sols,
                           const std::vector<TorusPoint>& points) {
  const Quadrature& q = p.kernel.quadrature();
  std::vector<cplx> at_first(sols.size()), half(sols.size());
  for (std::size_t m = 0; m < sols.size(); ++m) {
    at_first[m] = sols[m].density_hat(1);
    const Eigen::VectorXcd wall = sols[m].fhat.row(0).transpose();
    half[m] = half_moment(q, as_span(wall), HalfRange::upper);
  }
  return {synth(p.modes, at_first, points), synth(p.modes, half, points)};
}

SigmaRecord solve_sigma(const Config& c, const ScatteringKernel& kernel, double transport_coeff,
                        double cstar, double cstar_rule, double sigma,
                        const std::vector<TorusPoint>& points) {
  const Quadrature& q = kernel.quadrature();
  const int d = c.dimension;
  const PhysicalConstants constants = c.constants();
  const SourceData src = resolve_source(c, sigma);

  SigmaRecord rec;
  rec.sigma = sigma;

  FractionalProblem frac{d, 1.0, cstar, src.modes, src.coeffs};
  const std::vector<cplx> r_hat = solve_fracdiff(frac);
  frac.c_star = cstar_rule;
  const std::vector<cplx> r_hat_rule = solve_fracdiff(frac);

  TransportProblem p = make_transport_problem(kernel, sigma, c.kappa, src.modes, src.coeffs,
                                              c.grid, c.lambda, c.solver);
  rec.albedo = p.albedo();
  std::vector<ModeSolution> sols;
  const auto start = std::chrono::steady_clock::now();
  try {
    sols = solve_all_modes(p, c.threads);
  } catch (const std::exception& e) {
    throw SolverError("sigma=" + sigma_label(sigma) + ", " + e.what());
  }
  rec.seconds_per_solve =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  // Per-mode diagnostics.
  std::vector<std::vector<double>> profiles;
  for (const auto& s : sols) profiles.push_back(entropy_flux_profile(q, s));
  for (std::size_t m = 0; m < sols.size(); ++m) {
    const ModeSolution& s = sols[m];
    ModeRecord mr;
    mr.k = s.k;
    mr.analytic = s.analytic;
    mr.boundary_residual = s.boundary_residual;
    mr.transport_residual = s.transport_residual;
    mr.flux_identity_residual = boundary_flux_residual(p, m, s);
    mr.boundary_contraction = s.boundary_contraction;
    const auto& prof = profiles[m];
    const double mode_scale = std::max(
        std::abs(*std::max_element(prof.begin(), prof.end(), [](double a, double b) { return std::abs(a) < std::abs(b); })),
        1e-300);
    for (std::size_t j = 1; j + 1 < prof.size(); ++j)
      if (prof[j + 1] > prof[j] + 1e-6 * mode_scale) ++mr.entropy_violations;
    rec.entropy_violations += mr.entropy_violations;
    rec.boundary_residual = std::max(rec.boundary_residual, mr.boundary_residual);
    rec.transport_residual = std::max(rec.transport_residual, mr.transport_residual);
    rec.flux_identity_residual = std::max(rec.flux_identity_residual, mr.flux_identity_residual);
    rec.max_boundary_contraction = std::max(rec.max_boundary_contraction, mr.boundary_contraction);
    if (s.k[0] == 0 && s.k[1] == 0)
      rec.k0_error = (s.fhat.array() - src.coeffs[m]).abs().maxCoeff();
    rec.modes.push_back(mr);
  }

  // Boundary trace and current against the fractional limit.
  const Evaluation ev = evaluate_traces(p, sols, points);
  const std::vector<double> R = synth(src.modes, r_hat, points);
  const std::vector<double> R_rule = synth(src.modes, r_hat_rule, points);
  const ErrorNorms trace_err = error_norms(ev.trace, R);
  rec.err_trace_l2 = trace_err.l2;
  rec.err_trace_sup = trace_err.sup;
  rec.err_trace_halfrange_l2 = error_norms(ev.halfrange, R).l2;
  rec.err_trace_l2_rule_cstar = error_norms(ev.trace, R_rule).l2;

  std::vector<cplx> flux_hat(sols.size()), limit_flux_hat(sols.size());
  Eigen::VectorXd wy(static_cast<Eigen::Index>(q.size()));
  for (std::size_t i = 0; i < q.size(); ++i)
    wy(static_cast<Eigen::Index>(i)) = q.weights()(static_cast<Eigen::Index>(i)) * q.omega_y(i);
  for (std::size_t m = 0; m < sols.size(); ++m) {
    flux_hat[m] = sigma * sols[m].fhat.row(0).transpose().cwiseProduct(wy.cast<cplx>()).sum() /
                  q.sphere_measure();
    // -(<w.Omega>/(d+1)) d_y rho at y = 0 with rho = R exp(-2 pi |k| y).
    limit_flux_hat[m] = transport_coeff / (d + 1.0) * 2.0 * std::numbers::pi *
                        mode_norm(src.modes[m]) * r_hat[m];
  }
  rec.err_current_l2 =
      error_norms(synth(src.modes, flux_hat, points), synth(src.modes, limit_flux_hat, points)).l2;

  // Weighted L2 norm of the current over the truncated domain (Parseval in x, trapezoid in y).
  double current_sq = 0.0;
  for (const auto& s : sols) {
    const Eigen::VectorXd per_level =
        s.current_hat.cwiseAbs2() * q.weights() / q.sphere_measure();
    for (std::size_t j = 0; j + 1 < p.ygrid.size(); ++j)
      current_sq += 0.5 * (p.ygrid[j + 1] - p.ygrid[j]) *
                    (per_level(static_cast<Eigen::Index>(j)) + per_level(static_cast<Eigen::Index>(j) + 1));
  }
  rec.current_norm = std::sqrt(current_sq);

  // Maximum principle and radiation pressure from the real field, in batches of x points.
  const std::vector<double> S = synth(src.modes, src.coeffs, points);
  for (double v : S) rec.source_sup = std::max(rec.source_sup, std::abs(v));
  double field_sup = 0.0;
  std::vector<double> pressure;
  double isotropy = 0.0;
  constexpr std::size_t batch = 64;
  for (std::size_t start_idx = 0; start_idx < points.size(); start_idx += batch) {
    const std::size_t stop = std::min(points.size(), start_idx + batch);
    const std::vector<TorusPoint> chunk(points.begin() + static_cast<std::ptrdiff_t>(start_idx),
                                        points.begin() + static_cast<std::ptrdiff_t>(stop));
    const RealField field = assemble_field(p, sols, chunk);
    for (double v : field.values) field_sup = std::max(field_sup, std::abs(v));
    rec.max_imag = std::max(rec.max_imag, field.max_imag);
    if (d == 2) {
      const RadiationPressure rp = radiation_pressure(p, field, constants);
      pressure.insert(pressure.end(), rp.pressure.begin(), rp.pressure.end());
      for (double v : rp.isotropy_defect) isotropy = std::max(isotropy, v);
    }
  }
  rec.max_principle_margin = rec.source_sup - field_sup;

  if (d == 2) {
    std::vector<double> limit_pressure(R.size());
    for (std::size_t i = 0; i < R.size(); ++i)
      limit_pressure[i] = 4.0 * std::numbers::pi / (3.0 * constants.c) * R[i];
    rec.pressure_limit_l2 = error_norms(pressure, limit_pressure).l2;
    rec.pressure_isotropy_defect = isotropy;
    // (3/4)(1-alpha) P + alpha <w.Omega> sigma^{-1} (2 pi |k|) P - pi a T^4 / c per mode, with
    // P = (4 pi / 3c) R and a T^4 = S / (1 + kappa sigma), relative to the emission term.
    const double alpha = p.albedo();
    double worst = 0.0;
    double scale = 0.0;
    for (std::size_t m = 0; m < src.modes.size(); ++m) {
      const cplx P = 4.0 * std::numbers::pi / (3.0 * constants.c) * r_hat[m];
      const cplx emission = std::numbers::pi * src.coeffs[m] / ((1.0 + p.beta()) * constants.c);
      const cplx r = 0.75 * (1.0 - alpha) * P +
                     alpha * transport_coeff / sigma * 2.0 * std::numbers::pi * mode_norm(src.modes[m]) * P -
                     emission;
      worst = std::max(worst, std::abs(r));
      scale = std::max(scale, std::abs(emission));
    }
    rec.pressure_balance_residual = scale > 0.0 ? worst / scale : worst;
  } else {
    rec.pressure_limit_l2 = rec.pressure_isotropy_defect = rec.pressure_balance_residual = kNaN;
  }

  if (c.truncation_check) {
    GridOptions deeper = c.grid;
    deeper.cells *= 2;
    deeper.depth_in_decay_lengths *= 2.0;
    const TransportProblem p2 = make_transport_problem(kernel, sigma, c.kappa, src.modes, src.coeffs,
                                                       deeper, c.lambda, c.solver);
    const auto sols2 = solve_all_modes(p2, c.threads);
    const Evaluation ev2 = evaluate_traces(p2, sols2, points);
    rec.truncation_change = error_norms(ev.trace, ev2.trace).sup;
    if (std::abs(p2.ygrid[1] - p.ygrid[1]) > 1e-12 * p.ygrid[1])
      rec.truncation_change = std::max(rec.truncation_change, error_norms(ev.halfrange, ev2.halfrange).sup);
  } else {
    rec.truncation_change = kNaN;
  }

  // Trace samples: all points for d = 1, the line x2 = 0 for d = 2.
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (d == 2 && points[i][1] != 0.0) continue;
    rec.trace_x.push_back(points[i][0]);
    rec.trace_transport.push_back(ev.trace[i]);
    rec.trace_fractional.push_back(R[i]);
  }
  return rec;
}

}  // namespace

SweepReport run_sweep(const Config& c) {
  const auto start = std::chrono::steady_clock::now();
  SweepReport report;
  report.config = c;
  const Quadrature q = build_quadrature(c.dimension, c.quadrature_n);
  const ScatteringKernel kernel = build_kernel(q, c.kernel);
  const OmegaSolution omega = solve_omega(kernel);
  report.transport_coeff = omega.transport_coeff;
  report.gap = omega.gap;
  report.c_star = c_star(c.kappa, omega.transport_coeff, c.dimension);
  report.c_star_rule =
      c.kappa * omega.transport_coeff * q.sphere_measure() / ((c.dimension + 1.0) * q.half_measure());
  const auto points = torus_grid(c.dimension, c.trace_points);
  for (double sigma : c.sigmas)
    report.records.push_back(solve_sigma(c, kernel, omega.transport_coeff, report.c_star,
                                         report.c_star_rule, sigma, points));
  report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double observed_rate(const SweepReport& r) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& rec : r.records) {
    if (!(rec.err_trace_l2 > 0.0)) continue;
    const double x = std::log(rec.sigma);
    const double y = std::log(rec.err_trace_l2);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return kNaN;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string sigma_label(double sigma) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", sigma);
  return buf;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidArgument(path.string() + ": cannot open for writing");
  return out;
}

}  // namespace

void write_results_csv(const SweepReport& r, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << kResultsHeader << "\n";
  for (const auto& rec : r.records)
    out << fmt(rec.sigma) << ',' << fmt(rec.err_trace_l2) << ',' << fmt(rec.err_trace_sup) << ','
        << fmt(rec.err_current_l2) << ',' << fmt(rec.max_principle_margin) << ','
        << rec.entropy_violations << ',' << fmt(rec.seconds_per_solve) << "\n";
}

void write_report_json(const SweepReport& r, const std::filesystem::path& path) {
  json records = json::array();
  for (const auto& rec : r.records) {
    json modes = json::array();
    for (const auto& m : rec.modes)
      modes.push_back({{"k", r.config.dimension == 1 ? json(m.k[0]) : json::array({m.k[0], m.k[1]})},
                       {"analytic", m.analytic},
                       {"boundary_residual", m.boundary_residual},
                       {"transport_residual", m.transport_residual},
                       {"flux_identity_residual", m.flux_identity_residual},
                       {"boundary_contraction", m.boundary_contraction},
                       {"entropy_violations", m.entropy_violations}});
    records.push_back({
        {"sigma", rec.sigma},
        {"albedo", rec.albedo},
        {"err_trace_l2", rec.err_trace_l2},
        {"err_trace_sup", rec.err_trace_sup},
        {"err_current_l2", rec.err_current_l2},
        {"max_principle_margin", rec.max_principle_margin},
        {"entropy_violations", rec.entropy_violations},
        {"seconds_per_solve", rec.seconds_per_solve},
        {"err_trace_halfrange_l2", rec.err_trace_halfrange_l2},
        {"err_trace_l2_rule_cstar", rec.err_trace_l2_rule_cstar},
        {"flux_identity_residual", rec.flux_identity_residual},
        {"boundary_residual", rec.boundary_residual},
        {"transport_residual", rec.transport_residual},
        {"k0_error", rec.k0_error},
        {"max_boundary_contraction", rec.max_boundary_contraction},
        {"current_norm", rec.current_norm},
        {"max_imag", rec.max_imag},
        {"source_sup", rec.source_sup},
        {"truncation_change", finite_or_null(rec.truncation_change)},
        {"pressure_limit_l2", finite_or_null(rec.pressure_limit_l2)},
        {"pressure_isotropy_defect", finite_or_null(rec.pressure_isotropy_defect)},
        {"pressure_balance_residual", finite_or_null(rec.pressure_balance_residual)},
        {"modes", modes},
    });
  }
  json ratios = json::array();
  for (std::size_t i = 1; i < r.records.size(); ++i)
    ratios.push_back(finite_or_null(r.records[i].err_trace_l2 / r.records[i - 1].err_trace_l2));
  const PhysicalConstants pc = r.config.constants();
  json out = {
      {"config", json::parse(config_to_json(r.config))},
      {"constants", {{"a", pc.a}, {"c", pc.c}, {"k_B", pc.k_B}, {"hbar", pc.hbar}, {"si", pc.si}}},
      {"transport_coeff", r.transport_coeff},
      {"gap", r.gap},
      {"c_star", r.c_star},
      {"c_star_rule", r.c_star_rule},
      {"trace_error_ratios", ratios},
      {"observed_rate", finite_or_null(observed_rate(r))},
      {"total_seconds", r.total_seconds},
      {"records", records},
  };
  std::ofstream f = open_out(path);
  f << out.dump(2) << "\n";
}

void write_traces(const SweepReport& r, const std::filesystem::path& dir) {
  for (const auto& rec : r.records) {
    std::ofstream out = open_out(dir / ("trace_" + sigma_label(rec.sigma) + ".csv"));
    out << "x,transport_trace,fractional_R\n";
    for (std::size_t i = 0; i < rec.trace_x.size(); ++i)
      out << fmt(rec.trace_x[i]) << ',' << fmt(rec.trace_transport[i]) << ','
          << fmt(rec.trace_fractional[i]) << "\n";
  }
}

FracReport run_fractional(const Config& c) {
  const Quadrature q = build_quadrature(c.dimension, c.quadrature_n);
  const OmegaSolution omega = solve_omega(build_kernel(q, c.kernel));
  // Temperature sources depend on sigma; use the first sweep value.
  const SourceData src = resolve_source(c, c.sigmas.front());
  FracReport r;
  r.problem = {c.dimension, c.gamma, c_star(c.kappa, omega.transport_coeff, c.dimension), src.modes,
               src.coeffs};
  r.r_hat = solve_fracdiff(r.problem);
  if (c.gamma == 1.0) {
    const RobinExtension ext = solve_robin_extension(r.problem);
    r.robin_residual = ext.robin_residual;
    for (std::size_t i = 0; i < r.r_hat.size(); ++i)
      r.robin_agreement = std::max(r.robin_agreement, std::abs(ext.trace_hat[i] - r.r_hat[i]));
  } else {
    r.robin_residual = r.robin_agreement = kNaN;
  }
  const auto points = torus_grid(c.dimension, c.trace_points);
  r.source = synth(src.modes, src.coeffs, points);
  r.solution = synth(src.modes, r.r_hat, points);
  for (const auto& x : points) r.x.push_back(x[0]);
  return r;
}

void write_fractional(const FracReport& r, const std::filesystem::path& dir) {
  {
    std::ofstream out = open_out(dir / "fractional.csv");
    out << (r.problem.dimension == 1 ? "x,S,R\n" : "x1,S,R\n");
    for (std::size_t i = 0; i < r.x.size(); ++i)
      out << fmt(r.x[i]) << ',' << fmt(r.source[i]) << ',' << fmt(r.solution[i]) << "\n";
  }
  json modes = json::array();
  for (std::size_t i = 0; i < r.problem.modes.size(); ++i)
    modes.push_back({{"k", json::array({r.problem.modes[i][0], r.problem.modes[i][1]})},
                     {"S", complex_json(r.problem.source_hat[i])},
                     {"R", complex_json(r.r_hat[i])}});
  json out = {{"dimension", r.problem.dimension},
              {"gamma", r.problem.gamma},
              {"c_star", r.problem.c_star},
              {"robin_residual", finite_or_null(r.robin_residual)},
              {"robin_agreement", finite_or_null(r.robin_agreement)},
              {"modes", modes}};
  std::ofstream f = open_out(dir / "fractional.json");
  f << out.dump(2) << "\n";
}

std::vector<ExtensionRow> run_extension_check(const Config& c) {
  std::vector<ExtensionRow> rows;
  for (double gamma : c.extension.gammas)
    for (int k : c.extension.ks) {
      const ExtensionField f = extension_pde_neumann(gamma, {k, 0}, c.extension.options);
      ExtensionRow row;
      row.gamma = gamma;
      row.k = k;
      row.neumann = f.neumann_at_0;
      row.neumann_coarse = f.neumann_coarse;
      row.neumann_extrapolated = f.neumann_extrapolated;
      row.multiplier = std::pow(2.0 * std::numbers::pi * k, gamma);
      row.rel_error = std::abs(row.neumann - row.multiplier) / row.multiplier;
      rows.push_back(row);
    }
  return rows;
}

void write_extension(const std::vector<ExtensionRow>& rows, const std::filesystem::path& dir) {
  std::ofstream out = open_out(dir / "extension.csv");
  out << "gamma,k,neumann,neumann_coarse,neumann_extrapolated,multiplier,rel_error\n";
  for (const auto& r : rows)
    out << fmt(r.gamma) << ',' << r.k << ',' << fmt(r.neumann) << ',' << fmt(r.neumann_coarse) << ','
        << fmt(r.neumann_extrapolated) << ',' << fmt(r.multiplier) << ',' << fmt(r.rel_error) << "\n";
}

}  // namespace kinfrac
