#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <algorithm>
#include <random>

#include <Eigen/Dense>

#include "kinfrac/errors.hpp"
#include "kinfrac/fractional.hpp"
#include "kinfrac/measures.hpp"

using namespace kinfrac;
using cplx = std::complex<double>;
constexpr double pi = std::numbers::pi;

namespace {

FractionalProblem random_problem(int d, int kmax, double gamma, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FractionalProblem p;
  p.dimension = d;
  p.gamma = gamma;
  p.c_star = 0.3 + (u(rng) + 1.0);
  p.modes = symmetric_mode_set(d, kmax);
  p.source_hat.assign(p.modes.size(), 0.0);
  for (std::size_t i = 0; i < p.modes.size(); ++i) {
    const int j = find_mode(p.modes, {-p.modes[i][0], -p.modes[i][1]});
    if (static_cast<std::size_t>(j) < i) continue;
    const cplx c = static_cast<std::size_t>(j) == i ? cplx(u(rng), 0.0) : cplx(u(rng), u(rng));
    p.source_hat[i] = c;
    p.source_hat[static_cast<std::size_t>(j)] = std::conj(c);
  }
  return p;
}

}  // namespace

TEST_CASE("constants") {
  CHECK(c_gamma(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  // c_gamma from its definition with the reflection of Gamma at -gamma/2.
  for (double g : {0.3, 0.5, 1.5, 1.9}) {
    const double direct = std::pow(2.0, -g) * std::abs(std::tgamma(-g / 2)) / std::tgamma(g / 2);
    CHECK(c_gamma(g) == doctest::Approx(direct).epsilon(1e-14));
  }
  CHECK(c_star(1.0, 1.0, 1) == doctest::Approx(pi / 2).epsilon(1e-14));
  CHECK(c_star(1.0, 1.0, 2) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  for (int d : {1, 2}) CHECK(c_star_boundary_form(0.7, 1.3, d) == doctest::Approx(c_star(0.7, 1.3, d)).epsilon(1e-14));
  CHECK_THROWS_AS(c_gamma(2.0), InvalidArgument);
  CHECK_THROWS_AS(c_gamma(0.0), InvalidArgument);
}

TEST_CASE("multiplier") {
  const std::vector<ModeIndex> modes = {{0, 0}, {1, 0}, {2, 0}};
  const std::vector<cplx> ones(3, 1.0);
  const auto r = fractional_apply(1.0, modes, ones);
  CHECK(std::abs(r[0]) == 0.0);
  CHECK(r[1].real() == doctest::Approx(2 * pi).epsilon(1e-15));
  const auto r2 = fractional_apply(1.999999, modes, ones);
  CHECK(r2[2].real() == doctest::Approx(16 * pi * pi).epsilon(1e-5));
  CHECK_THROWS_AS(fractional_apply(2.5, modes, ones), InvalidArgument);
}

TEST_CASE("solve_fracdiff examples") {
  FractionalProblem p{1, 1.0, pi / 2, {{-1, 0}, {0, 0}, {1, 0}}, {0.5, 0.0, 0.5}};
  auto R = solve_fracdiff(p);
  CHECK(R[2].real() == doctest::Approx(0.5 / (1 + pi * pi)).epsilon(1e-14));
  p.dimension = 2;
  p.c_star = 4.0 / 3.0;
  R = solve_fracdiff(p);
  CHECK(R[0].real() == doctest::Approx(0.5 / (1 + 8 * pi / 3)).epsilon(1e-14));
  FractionalProblem c{2, 0.7, 2.0, {{0, 0}}, {1.0}};
  CHECK(solve_fracdiff(c)[0] == cplx(1.0));
  FractionalProblem open{1, 1.0, 1.0, {{0, 0}, {1, 0}}, {1.0, 1.0}};
  CHECK_THROWS_AS(solve_fracdiff(open), InvalidArgument);
}

TEST_CASE("property: Robin extension, mean preservation, resolvent contraction") {
  std::mt19937_64 rng(11);
  const auto pts1 = torus_grid(1, 256);
  const auto pts2 = torus_grid(2, 48);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = trial % 2 ? 2 : 1;
    // 33 modes in d = 1 (kmax 16); 25 in d = 2 (kmax 2) plus a 33-mode-wide d = 1 set each trial.
    FractionalProblem p = random_problem(d, d == 1 ? 16 : 2, 1.0, rng);
    if (d == 1) CHECK(p.modes.size() == 33);
    const auto R = solve_fracdiff(p);
    const auto ext = solve_robin_extension(p);
    for (std::size_t i = 0; i < R.size(); ++i) CHECK(std::abs(R[i] - ext.trace_hat[i]) <= 1e-12);
    CHECK(ext.robin_residual <= 1e-12);
    const int zero = find_mode(p.modes, {0, 0});
    CHECK(R[static_cast<std::size_t>(zero)] == p.source_hat[static_cast<std::size_t>(zero)]);
    const auto& pts = d == 1 ? pts1 : pts2;
    const auto S = synthesize(p.modes, p.source_hat, pts).values;
    const auto u = synthesize(p.modes, R, pts).values;
    double ss = 0, su = 0;
    for (double v : S) ss = std::max(ss, std::abs(v));
    for (double v : u) su = std::max(su, std::abs(v));
    CHECK(su <= ss + 1e-9);
    // Other orders keep mean preservation and contraction too.
    FractionalProblem q = p;
    q.gamma = 0.5 + 0.05 * trial;
    const auto Rq = solve_fracdiff(q);
    CHECK(Rq[static_cast<std::size_t>(zero)] == q.source_hat[static_cast<std::size_t>(zero)]);
  }
}

TEST_CASE("Robin extension requires gamma = 1") {
  FractionalProblem p{1, 0.5, 1.0, {{0, 0}}, {1.0}};
  CHECK_THROWS_AS(solve_robin_extension(p), InvalidArgument);
  p.gamma = 1.0;
  const auto e = solve_robin_extension(p);
  CHECK(e.field(0, 3.0) == cplx(1.0));
}

TEST_CASE("degenerate extension reproduces the multiplier") {
  const auto start = std::chrono::steady_clock::now();
  for (double g : {0.5, 1.0, 1.5})
    for (int k : {1, 2}) {
      const ExtensionField f = extension_pde_neumann(g, {k, 0});
      const double target = std::pow(2 * pi * k, g);
      const double rel = std::abs(f.neumann_at_0 - target) / target;
      CHECK(rel < (g == 1.0 ? 1e-3 : 1e-2));
      CHECK(f.values.front() == 1.0);
      CHECK(std::abs(f.values.back()) < 1e-12);
      CHECK(std::abs(f.neumann_extrapolated - target) / target < 1e-3);
    }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 10.0);
  // gamma = 1 is the Laplace problem: F = exp(-2 pi y) on the mesh.
  const ExtensionField f = extension_pde_neumann(1.0, {1, 0});
  for (std::size_t j = 0; j < f.y.size(); j += 97) CHECK(f.values[j] == doctest::Approx(std::exp(-2 * pi * f.y[j])).epsilon(1e-3).scale(1.0));
}

TEST_CASE("extension errors") {
  CHECK_THROWS_AS(extension_pde_neumann(1.0, {0, 0}), InvalidArgument);
  CHECK_THROWS_AS(extension_pde_neumann(2.0, {1, 0}), InvalidArgument);
  ExtensionOptions tiny;
  tiny.cells = 4;
  CHECK_THROWS_AS(extension_pde_neumann(1.0, {1, 0}, tiny), InvalidArgument);
  ExtensionOptions coarse;
  coarse.cells = 8;
  coarse.richardson_tolerance = 1e-9;
  CHECK_THROWS_AS(extension_pde_neumann(1.5, {1, 0}, coarse), SolverError);
}

TEST_CASE("property: positivity against a dense real-space solve") {
  // (I + c (-Delta)^{gamma/2}) assembled as a dense matrix on 32 points from its kernel sum.
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 32;
  const auto pts = torus_grid(1, n);
  for (int trial = 0; trial < 8; ++trial) {
    const double gamma = 0.4 + 0.2 * trial;
    FractionalProblem p = random_problem(1, 5, gamma, rng);
    // Shift the mean so S >= 0.
    const auto raw = synthesize(p.modes, p.source_hat, pts).values;
    const double lo = *std::min_element(raw.begin(), raw.end());
    p.source_hat[static_cast<std::size_t>(find_mode(p.modes, {0, 0}))] += -lo + 0.1 * u(rng);
    const auto S = synthesize(p.modes, p.source_hat, pts).values;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double a = 0;
        for (int k = -n / 2 + 1; k <= n / 2; ++k)
          a += (1 + p.c_star * std::pow(2 * pi * std::abs(k), gamma)) * std::cos(2 * pi * k * (i - j) / double(n));
        A(i, j) = a / n;
      }
    const Eigen::VectorXd dense = A.partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(S.data(), n));
    const auto R = synthesize(p.modes, solve_fracdiff(p), pts).values;
    double smax = 0;
    for (double v : S) smax = std::max(smax, v);
    for (int i = 0; i < n; ++i) {
      CHECK(dense(i) == doctest::Approx(R[static_cast<std::size_t>(i)]).epsilon(1e-10).scale(1.0));
      CHECK(R[static_cast<std::size_t>(i)] >= -1e-9 * smax);
    }
  }
}
