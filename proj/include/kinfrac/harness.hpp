#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kinfrac/errors.hpp"
#include "kinfrac/fourier.hpp"
#include "kinfrac/fractional.hpp"
#include "kinfrac/physical.hpp"
#include "kinfrac/scattering.hpp"
#include "kinfrac/transport.hpp"

namespace kinfrac {

/// Raised for malformed configuration; the message starts with the offending field path.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct SourceSpec {
  enum class Kind { cosine, fourier, temperature };
  Kind kind = Kind::cosine;

  /// cosine: S(x) = mean + amplitude cos(2 pi k.x).
  double mean = 1.0;
  double amplitude = 1.0;
  ModeIndex k{1, 0};

  /// fourier: explicit coefficients; the set is closed under k -> -k on resolution.
  std::vector<ModeIndex> modes;
  std::vector<std::complex<double>> coeffs;

  /// temperature: S = (1 + kappa sigma) a T^4 with either T(x) = t0 (1 + epsilon cos 2 pi k.x)^{1/4}
  /// sampled on a uniform grid of `grid` points per axis, or explicit `samples` on that grid.
  double t0 = 1.0;
  double epsilon = 0.5;
  std::vector<double> samples;
  int grid = 64;
  int kmax = 2;
};

struct ExtensionCheckConfig {
  std::vector<double> gammas{0.5, 1.0, 1.5};
  std::vector<int> ks{1, 2};
  ExtensionOptions options;
};

struct DtnConfig {
  std::vector<int> dimensions{1, 2};
  int n_max = 5;
  int shoot_max = 3;
};

struct AuditKernel {
  int dimension = 2;
  KernelSpec spec;
};

struct AuditConfig {
  int n = 16;
  std::vector<AuditKernel> kernels{{1, {KernelKind::isotropic, {}}},
                                   {2, {KernelKind::isotropic, {}}},
                                   {2, {KernelKind::rayleigh_d2, {}}}};
  std::uint64_t seed = 12345;
};

struct Config {
  int dimension = 1;
  int quadrature_n = 8;
  KernelSpec kernel;
  double kappa = 1.0;
  double lambda = 0.0;
  double gamma = 1.0;
  std::vector<double> sigmas{8.0, 16.0, 32.0, 64.0, 128.0};
  SourceSpec source;
  GridOptions grid;
  SolverOptions solver;
  /// Points per axis of the x-grid used for norms and traces.
  int trace_points = 64;
  /// Re-solve with a doubled domain to report truncation sensitivity.
  bool truncation_check = true;
  bool si_units = false;
  int threads = 1;

  ExtensionCheckConfig extension;
  DtnConfig dtn;
  AuditConfig audit;

  PhysicalConstants constants() const {
    return si_units ? PhysicalConstants::si_units() : PhysicalConstants::nondimensional();
  }
};

/// Reads TOML (.toml) or JSON (anything else) and validates every field.
Config load_config(const std::filesystem::path& path);
Config parse_config_json(const std::string& text);
Config parse_config_toml(const std::string& text);
/// Canonical JSON echo of a configuration.
std::string config_to_json(const Config& c);

struct SourceData {
  std::vector<ModeIndex> modes;
  std::vector<std::complex<double>> coeffs;
};

/// Samples of a T >= 0 field on torus_grid(d, n) -> Fourier data of (1 + kappa sigma) a T^4.
std::vector<std::complex<double>> temperature_to_source(int d, int n, std::span<const double> temperature,
                                                        std::span<const ModeIndex> modes,
                                                        const PhysicalConstants& constants,
                                                        double sigma, double kappa);

/// Source coefficients of the configuration at scattering coefficient sigma.
SourceData resolve_source(const Config& c, double sigma);

struct ErrorNorms {
  /// sqrt(mean (a - b)^2) over the samples.
  double l2 = 0.0;
  double sup = 0.0;
};

ErrorNorms error_norms(std::span<const double> a, std::span<const double> b);

struct ModeRecord {
  ModeIndex k{0, 0};
  double boundary_residual = 0.0;
  double transport_residual = 0.0;
  double flux_identity_residual = 0.0;
  double boundary_contraction = 0.0;
  int entropy_violations = 0;
  bool analytic = false;
};

struct SigmaRecord {
  double sigma = 0.0;
  double albedo = 0.0;
  double err_trace_l2 = 0.0;
  double err_trace_sup = 0.0;
  double err_current_l2 = 0.0;
  double max_principle_margin = 0.0;
  int entropy_violations = 0;
  double seconds_per_solve = 0.0;

  /// Same trace error for the half-range average <<f>>_+(x, 0).
  double err_trace_halfrange_l2 = 0.0;
  /// Trace error against R built with the rule's own half measure in c_star.
  double err_trace_l2_rule_cstar = 0.0;
  double flux_identity_residual = 0.0;
  double boundary_residual = 0.0;
  double transport_residual = 0.0;
  /// Largest deviation of the k = 0 mode from S(0).
  double k0_error = 0.0;
  double max_boundary_contraction = 0.0;
  /// Weighted L2 norm of sigma (f - <f>) over the truncated domain.
  double current_norm = 0.0;
  double max_imag = 0.0;
  double source_sup = 0.0;
  /// Change of the trace estimator when the domain depth is doubled (NaN if not run).
  double truncation_change = 0.0;

  /// d = 2 only (NaN otherwise).
  double pressure_limit_l2 = 0.0;
  double pressure_isotropy_defect = 0.0;
  double pressure_balance_residual = 0.0;

  std::vector<ModeRecord> modes;
  std::vector<double> trace_x;
  std::vector<double> trace_transport;
  std::vector<double> trace_fractional;
};

struct SweepReport {
  Config config;
  double transport_coeff = 0.0;
  double gap = 0.0;
  double c_star = 0.0;
  double c_star_rule = 0.0;
  std::vector<SigmaRecord> records;
  double total_seconds = 0.0;
};

/// Runs the sigma sweep. Throws SolverError naming (sigma, k) when a mode solve fails.
SweepReport run_sweep(const Config& c);

/// Least-squares slope of log err against log sigma (an observation, not a guarantee).
double observed_rate(const SweepReport& r);

std::string sigma_label(double sigma);
void write_results_csv(const SweepReport& r, const std::filesystem::path& path);
void write_report_json(const SweepReport& r, const std::filesystem::path& path);
/// One trace_<sigma>.csv per record.
void write_traces(const SweepReport& r, const std::filesystem::path& dir);

/// Column header of results.csv.
inline constexpr const char* kResultsHeader =
    "sigma,err_trace_l2,err_trace_sup,err_current_l2,max_principle_margin,entropy_violations,"
    "seconds_per_solve";

struct FracReport {
  FractionalProblem problem;
  std::vector<std::complex<double>> r_hat;
  double robin_residual = 0.0;
  /// max |R_fracdiff - R_robin| over modes.
  double robin_agreement = 0.0;
  std::vector<double> x;
  std::vector<double> source;
  std::vector<double> solution;
};

FracReport run_fractional(const Config& c);
void write_fractional(const FracReport& r, const std::filesystem::path& dir);

struct ExtensionRow {
  double gamma = 0.0;
  int k = 0;
  double neumann = 0.0;
  double neumann_coarse = 0.0;
  double neumann_extrapolated = 0.0;
  double multiplier = 0.0;
  double rel_error = 0.0;
};

std::vector<ExtensionRow> run_extension_check(const Config& c);
void write_extension(const std::vector<ExtensionRow>& rows, const std::filesystem::path& dir);

}  // namespace kinfrac
