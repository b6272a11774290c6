#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "kinfrac/harness.hpp"

using namespace kinfrac;
using cplx = std::complex<double>;
namespace fs = std::filesystem;
constexpr double pi = std::numbers::pi;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kinfrac_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string message_of(auto fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config: TOML and JSON parse to the same configuration") {
  const Config a = parse_config_toml(R"(
dimension = 2
kappa = 0.5
sigmas = [4, 8.5]
threads = 2
[quadrature]
n = 6
[kernel]
kind = "rayleigh-d2"
[source]
kind = "cosine"
amplitude = 0.25
k = [1, 1]
[grid]
cells = 50
depth = 3.0
[solver]
inner = "source-iteration"
boundary = "fixed-point"
tolerance = 1e-9
[output]
trace_points = 12
truncation_check = false
)");
  const Config b = parse_config_json(R"({"dimension": 2, "kappa": 0.5, "sigmas": [4, 8.5], "threads": 2,
    "quadrature": {"n": 6}, "kernel": {"kind": "rayleigh-d2"},
    "source": {"kind": "cosine", "amplitude": 0.25, "k": [1, 1]},
    "grid": {"cells": 50, "depth": 3.0},
    "solver": {"inner": "source-iteration", "boundary": "fixed-point", "tolerance": 1e-9},
    "output": {"trace_points": 12, "truncation_check": false}})");
  CHECK(config_to_json(a) == config_to_json(b));
  CHECK(a.dimension == 2);
  CHECK(a.kernel.kind == KernelKind::rayleigh_d2);
  CHECK(a.sigmas == std::vector<double>{4.0, 8.5});
  CHECK(a.source.k == ModeIndex{1, 1});
  CHECK(a.solver.inner == InnerSolver::source_iteration);
  CHECK(a.solver.boundary == BoundaryScheme::fixed_point);
  CHECK_FALSE(a.truncation_check);
  // Echo round trip.
  CHECK(config_to_json(parse_config_json(config_to_json(a))) == config_to_json(a));
}

TEST_CASE("config: errors name the field") {
  CHECK(message_of([] { parse_config_json(R"({"sigmas": [8, 4]})"); }).starts_with("sigmas"));
  CHECK(message_of([] { parse_config_json(R"({"grid": {"cells": -3}})"); }).starts_with("grid.cells"));
  CHECK(message_of([] { parse_config_json(R"({"grid": {"bogus": 1}})"); }).starts_with("grid.bogus"));
  CHECK(message_of([] { parse_config_json(R"({"kernel": {"kind": "rayleigh-d2"}})"); }).starts_with("kernel"));
  CHECK(message_of([] { parse_config_json(R"({"dimension": 3})"); }).starts_with("dimension"));
  CHECK(message_of([] { parse_config_json(R"({"solver": {"inner": "magic"}})"); }).starts_with("solver.inner"));
  CHECK(message_of([] { parse_config_toml("kappa = \"one\""); }).starts_with("kappa"));
  CHECK_THROWS_AS(parse_config_json("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config_toml("x = = 1"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), ConfigError);
}

TEST_CASE("config files on disk") {
  const fs::path dir = scratch("cfg");
  std::ofstream(dir / "c.toml") << "sigmas = [8]\n[source]\nkind = \"temperature\"\nt0 = 2.0\n";
  std::ofstream(dir / "c.json") << R"({"sigmas": [8], "source": {"kind": "temperature", "t0": 2.0}})";
  CHECK(config_to_json(load_config(dir / "c.toml")) == config_to_json(load_config(dir / "c.json")));
}

TEST_CASE("error norms") {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  CHECK(error_norms(a, a).l2 == 0.0);
  const std::vector<double> b = {1.5, 2.5, 3.5};
  CHECK(error_norms(a, b).l2 == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(error_norms(a, b).sup == doctest::Approx(0.5).epsilon(1e-15));
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  std::vector<double> x(1000), y(1000);
  for (auto& v : x) v = g(rng);
  for (auto& v : y) v = g(rng);
  long double acc = 0, sup = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double e = static_cast<long double>(x[i]) - y[i];
    acc += e * e;
    sup = std::max(sup, std::abs(e));
  }
  CHECK(std::abs(error_norms(x, y).l2 - static_cast<double>(std::sqrt(acc / x.size()))) < 1e-14);
  CHECK(error_norms(x, y).sup == static_cast<double>(sup));
  CHECK_THROWS_AS(error_norms(a, std::vector<double>{1.0}), InvalidArgument);
}

TEST_CASE("temperature to source") {
  const PhysicalConstants nd = PhysicalConstants::nondimensional();
  const auto modes = symmetric_mode_set(1, 2);
  std::vector<double> t(32, 1.5);
  // kappa sigma = 9.
  auto S = temperature_to_source(1, 32, t, modes, nd, 9.0, 1.0);
  for (std::size_t i = 0; i < modes.size(); ++i)
    CHECK(std::abs(S[i] - (modes[i][0] == 0 ? cplx(10 * std::pow(1.5, 4)) : cplx(0))) < 1e-12);
  const auto pts = torus_grid(1, 32);
  for (std::size_t i = 0; i < pts.size(); ++i) t[i] = std::pow(1 + 0.5 * std::cos(2 * pi * pts[i][0]), 0.25);
  S = temperature_to_source(1, 32, t, modes, nd, 9.0, 1.0);
  CHECK(std::abs(S[2] - 10.0) < 1e-12);
  CHECK(std::abs(S[3] - 2.5) < 1e-12);
  CHECK(std::abs(S[4]) < 1e-12);
  t[3] = -1.0;
  CHECK_THROWS_AS(temperature_to_source(1, 32, t, modes, nd, 9.0, 1.0), InvalidArgument);
  const PhysicalConstants si = PhysicalConstants::si_units();
  // The model's a is the stated 8 pi^5 k_B^4 / (15 c^2 hbar^3), evaluated here in long double.
  const long double kb = 1.380649e-23L, hb = 1.054571817e-34L, cl = 299792458.0L, p = std::numbers::pi_v<long double>;
  const long double a = 8 * p * p * p * p * p * kb * kb * kb * kb / (15 * cl * cl * hb * hb * hb);
  CHECK(si.a == doctest::Approx(static_cast<double>(a)).epsilon(1e-14));
  CHECK(si.c == 299792458.0);
}

TEST_CASE("source resolution") {
  Config c;
  SourceData s = resolve_source(c, 8.0);
  CHECK(s.modes == std::vector<ModeIndex>{{-1, 0}, {0, 0}, {1, 0}});
  CHECK(s.coeffs[0] == cplx(0.5));
  c.source.kind = SourceSpec::Kind::fourier;
  c.source.modes = {{2, 0}, {0, 0}};
  c.source.coeffs = {{0.1, 0.2}, {1.0, 0.0}};
  s = resolve_source(c, 8.0);
  CHECK(s.modes.size() == 3);
  CHECK(s.coeffs[find_mode(s.modes, {-2, 0})] == cplx(0.1, -0.2));
  c.source.modes = {{1, 0}, {-1, 0}};
  c.source.coeffs = {{0.1, 0.2}, {0.1, 0.2}};
  CHECK_THROWS_AS(resolve_source(c, 8.0), ConfigError);
}

TEST_CASE("sweep with constant source is exact") {
  Config c = parse_config_json(R"({"sigmas": [8, 64, 512], "source": {"kind": "cosine", "amplitude": 0.0, "mean": 2.0, "k": 0},
                                   "grid": {"cells": 40}, "output": {"trace_points": 16}})");
  const SweepReport r = run_sweep(c);
  for (const auto& rec : r.records) {
    CHECK(rec.err_trace_l2 <= 1e-9);
    CHECK(rec.err_current_l2 <= 1e-9);
    CHECK(rec.max_principle_margin >= -1e-9);
  }
}

TEST_CASE("sweep outputs follow the frozen schema") {
  Config c = parse_config_json(R"({"sigmas": [8, 16.5], "grid": {"cells": 60}, "output": {"trace_points": 20}})");
  const SweepReport r = run_sweep(c);
  const fs::path dir = scratch("sweep");
  write_results_csv(r, dir / "results.csv");
  write_report_json(r, dir / "report.json");
  write_traces(r, dir);
  const std::string csv = read(dir / "results.csv");
  CHECK(csv.starts_with(std::string(kResultsHeader) + "\n"));
  CHECK(std::string(kResultsHeader) ==
        "sigma,err_trace_l2,err_trace_sup,err_current_l2,max_principle_margin,entropy_violations,seconds_per_solve");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  const auto report = nlohmann::json::parse(read(dir / "report.json"));
  CHECK(report["records"].size() == 2);
  CHECK(report["config"]["sigmas"][1] == 16.5);
  CHECK(report["records"][0]["modes"].size() == 3);
  const std::string trace = read(dir / "trace_16.5.csv");
  CHECK(trace.starts_with("x,transport_trace,fractional_R\n"));
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 21);
  CHECK(fs::exists(dir / "trace_8.csv"));
  CHECK(sigma_label(128.0) == "128");
  CHECK(observed_rate(r) < 0.0);
}

TEST_CASE("fractional and extension subcommand data") {
  Config c;
  c.source.kind = SourceSpec::Kind::temperature;
  c.source.kmax = 2;
  const FracReport f = run_fractional(c);
  CHECK(f.robin_agreement < 1e-12);
  CHECK(f.x.size() == static_cast<std::size_t>(c.trace_points));
  c.extension.gammas = {1.0};
  c.extension.ks = {1};
  const auto rows = run_extension_check(c);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].rel_error < 1e-3);
  const fs::path dir = scratch("frac");
  write_fractional(f, dir);
  write_extension(rows, dir);
  CHECK(fs::exists(dir / "fractional.csv"));
  CHECK(read(dir / "extension.csv").starts_with("gamma,k,"));
}

TEST_CASE("sweep: bounded current and deterministic output") {
  Config c = parse_config_json(R"({"sigmas": [8, 32, 128], "grid": {"cells": 80}, "output": {"trace_points": 16, "truncation_check": false}})");
  const SweepReport a = run_sweep(c);
  double lo = 1e300, hi = 0;
  for (const auto& rec : a.records) lo = std::min(lo, rec.current_norm), hi = std::max(hi, rec.current_norm);
  CHECK(hi < 2.0 * lo);
  c.threads = 3;
  const SweepReport b = run_sweep(c);
  const fs::path dir = scratch("det");
  write_traces(a, dir / "a");
  write_traces(b, dir / "b");
  for (const auto& rec : a.records) {
    const std::string name = "trace_" + sigma_label(rec.sigma) + ".csv";
    CHECK(read(dir / "a" / name) == read(dir / "b" / name));
  }
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].err_trace_l2 == b.records[i].err_trace_l2);
}
