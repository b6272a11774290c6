#include "kinfrac/fractional.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kinfrac/errors.hpp"
#include "kinfrac/measures.hpp"

namespace kinfrac {

namespace {

void check_order(double gamma, const char* who) {
  if (!(gamma > 0.0 && gamma < 2.0))
    throw InvalidArgument(std::string(who) + ": fractional order must lie in (0, 2), got " +
                          std::to_string(gamma));
}

double multiplier(double gamma, const ModeIndex& k) {
  const double xi = 2.0 * std::numbers::pi * mode_norm(k);
  return xi == 0.0 ? 0.0 : std::pow(xi, gamma);
}

}  // namespace

double c_gamma(double gamma) {
  check_order(gamma, "c_gamma");
  return std::pow(2.0, -gamma) * std::abs(std::tgamma(-0.5 * gamma)) / std::tgamma(0.5 * gamma);
}

double c_star(double kappa, double transport_coeff, int d) {
  return kappa * transport_coeff * ball_measure(d + 1) / ball_measure(d);
}

double c_star_boundary_form(double kappa, double transport_coeff, int d) {
  return kappa * sphere_measure(d) * transport_coeff / (ball_measure(d) * (d + 1));
}

std::vector<std::complex<double>> fractional_apply(double gamma, std::span<const ModeIndex> modes,
                                                   std::span<const std::complex<double>> coeffs) {
  check_order(gamma, "fractional_apply");
  if (modes.size() != coeffs.size())
    throw InvalidArgument("fractional_apply: mode and coefficient counts differ");
  std::vector<std::complex<double>> out(coeffs.size());
  for (std::size_t i = 0; i < modes.size(); ++i) out[i] = multiplier(gamma, modes[i]) * coeffs[i];
  return out;
}

void FractionalProblem::validate() const {
  if (dimension != 1 && dimension != 2)
    throw InvalidArgument("FractionalProblem: dimension must be 1 or 2");
  check_order(gamma, "FractionalProblem");
  if (!(c_star > 0.0)) throw InvalidArgument("FractionalProblem: c_star must be positive");
  if (modes.size() != source_hat.size())
    throw InvalidArgument("FractionalProblem: source_hat must have one value per mode");
  for (const auto& k : modes)
    if (find_mode(modes, {-k[0], -k[1]}) < 0)
      throw InvalidArgument("FractionalProblem: mode set is not closed under k -> -k");
}

std::vector<std::complex<double>> solve_fracdiff(const FractionalProblem& p) {
  p.validate();
  std::vector<std::complex<double>> out(p.modes.size());
  for (std::size_t i = 0; i < p.modes.size(); ++i)
    out[i] = p.source_hat[i] / (1.0 + p.c_star * multiplier(p.gamma, p.modes[i]));
  return out;
}

std::complex<double> RobinExtension::field(std::size_t mode, double y) const {
  return trace_hat.at(mode) * std::exp(-2.0 * std::numbers::pi * mode_norm(modes.at(mode)) * y);
}

std::complex<double> RobinExtension::normal_derivative(std::size_t mode, double y) const {
  return -2.0 * std::numbers::pi * mode_norm(modes.at(mode)) * field(mode, y);
}

RobinExtension solve_robin_extension(const FractionalProblem& p) {
  p.validate();
  if (p.gamma != 1.0)
    throw InvalidArgument("solve_robin_extension: the harmonic Robin problem needs gamma = 1");
  RobinExtension out;
  out.modes = p.modes;
  out.trace_hat.resize(p.modes.size());
  for (std::size_t i = 0; i < p.modes.size(); ++i) {
    const double xi = 2.0 * std::numbers::pi * mode_norm(p.modes[i]);
    // rho(y) = A exp(-xi y);  A + c_star xi A = S.
    out.trace_hat[i] = p.source_hat[i] / (1.0 + p.c_star * xi);
  }
  for (std::size_t i = 0; i < p.modes.size(); ++i) {
    const auto r = out.field(i, 0.0) - p.c_star * out.normal_derivative(i, 0.0) - p.source_hat[i];
    out.robin_residual = std::max(out.robin_residual, std::abs(r));
  }
  return out;
}

namespace {

struct ExtensionSolve {
  std::vector<double> y;
  std::vector<double> f;
  double neumann = 0.0;
};

ExtensionSolve solve_extension_ode(double gamma, double xi, double depth, int cells) {
  const double grading = std::max(2.0, 2.0 / gamma);
  const double power = 2.0 / gamma - 2.0;
  const double coeff = xi * xi / (gamma * gamma * std::pow(c_gamma(gamma), 2.0 / gamma));
  const auto n = static_cast<std::size_t>(cells);

  ExtensionSolve s;
  s.y.resize(n + 1);
  for (std::size_t j = 0; j <= n; ++j)
    s.y[j] = depth * std::pow(static_cast<double>(j) / cells, grading);

  // F'' = coeff y^power F, F(0) = 1, F(depth) = 0, three-point differences with the
  // coefficient integrated exactly over each dual cell; Thomas sweep.
  auto antiderivative = [&](double y) { return std::pow(y, power + 1.0) / (power + 1.0); };
  std::vector<double> dual(n + 1, 0.0);
  for (std::size_t j = 1; j < n; ++j)
    dual[j] = antiderivative(0.5 * (s.y[j] + s.y[j + 1])) - antiderivative(0.5 * (s.y[j - 1] + s.y[j]));
  std::vector<double> lower(n + 1, 0.0), diag(n + 1, 1.0), upper(n + 1, 0.0), rhs(n + 1, 0.0);
  rhs[0] = 1.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double hm = s.y[j] - s.y[j - 1];
    const double hp = s.y[j + 1] - s.y[j];
    lower[j] = 2.0 / (hm * (hm + hp));
    upper[j] = 2.0 / (hp * (hm + hp));
    diag[j] = -(2.0 / (hm * hp) + coeff * dual[j] * 2.0 / (hm + hp));
  }
  for (std::size_t j = 1; j <= n; ++j) {
    const double w = lower[j] / diag[j - 1];
    diag[j] -= w * upper[j - 1];
    rhs[j] -= w * rhs[j - 1];
  }
  s.f.assign(n + 1, 0.0);
  s.f[n] = rhs[n] / diag[n];
  for (std::size_t j = n; j-- > 0;) s.f[j] = (rhs[j] - upper[j] * s.f[j + 1]) / diag[j];

  // First-cell difference quotient, telescoped from the last cell through the discrete
  // equations so the tiny first cell does not cancel catastrophically.
  double d0 = (s.f[n] - s.f[n - 1]) / (s.y[n] - s.y[n - 1]);
  for (std::size_t j = n - 1; j >= 1; --j)
    d0 -= coeff * dual[j] * s.f[j];
  // d0 approximates F' at the first midpoint; F'(h/2) - F'(0) = coeff F(0) (h/2)^{power+1}/(power+1) + ...
  const double slope = d0 - coeff * s.f[0] * antiderivative(0.5 * s.y[1]);
  s.neumann = -slope;
  return s;
}

}  // namespace

ExtensionField extension_pde_neumann(double gamma, const ModeIndex& k,
                                     const ExtensionOptions& options) {
  check_order(gamma, "extension_pde_neumann");
  const double xi = 2.0 * std::numbers::pi * mode_norm(k);
  if (xi == 0.0) throw InvalidArgument("extension_pde_neumann: needs k != 0");
  if (options.cells < 8) throw InvalidArgument("extension_pde_neumann: need at least 8 cells");
  if (!(options.decay_lengths > 0.0))
    throw InvalidArgument("extension_pde_neumann: decay_lengths must be positive");

  // The solution decays like exp(-(xi^gamma y / c_gamma)^{1/gamma}).
  const double depth =
      c_gamma(gamma) * std::pow(xi, -gamma) * std::pow(options.decay_lengths, gamma);
  const ExtensionSolve fine = solve_extension_ode(gamma, xi, depth, options.cells);
  const ExtensionSolve coarse = solve_extension_ode(gamma, xi, depth, options.cells / 2);

  ExtensionField out;
  out.k = k;
  out.gamma = gamma;
  out.y = fine.y;
  out.values = fine.f;
  out.neumann_at_0 = fine.neumann;
  out.neumann_coarse = coarse.neumann;
  out.neumann_extrapolated = fine.neumann + (fine.neumann - coarse.neumann) / 3.0;
  if (!std::isfinite(fine.neumann) || !std::isfinite(coarse.neumann) ||
      std::abs(fine.neumann - coarse.neumann) > options.richardson_tolerance * std::abs(fine.neumann))
    throw SolverError("extension_pde_neumann: mesh too coarse to resolve the degenerate "
                      "coefficient (gamma=" + std::to_string(gamma) + ", N and N/2 disagree: " +
                      std::to_string(fine.neumann) + " vs " + std::to_string(coarse.neumann) + ")");
  return out;
}

}  // namespace kinfrac
