#pragma once

#include <complex>
#include <span>
#include <vector>

#include "kinfrac/fourier.hpp"

namespace kinfrac {

/// c_gamma = 2^{-gamma} |Gamma(-gamma/2)| / Gamma(gamma/2), gamma in (0, 2).
double c_gamma(double gamma);

/// kappa <omega.Omega> |B^{d+1}| / |B^d|.
double c_star(double kappa, double transport_coeff, int d);
/// The boundary-condition form kappa |S^d| <omega.Omega> / (|B^d| (d+1)); equal to c_star.
double c_star_boundary_form(double kappa, double transport_coeff, int d);

/// Multiplies every coefficient by (2 pi |k|)^gamma.
std::vector<std::complex<double>> fractional_apply(double gamma, std::span<const ModeIndex> modes,
                                                   std::span<const std::complex<double>> coeffs);

struct FractionalProblem {
  int dimension = 1;
  double gamma = 1.0;
  double c_star = 1.0;
  std::vector<ModeIndex> modes;
  std::vector<std::complex<double>> source_hat;

  void validate() const;
};

/// R(k) = S(k) / (1 + c_star (2 pi |k|)^gamma).
std::vector<std::complex<double>> solve_fracdiff(const FractionalProblem& p);

/// Bounded harmonic extension rho(k, y) = R(k) exp(-2 pi |k| y) with the Robin condition
/// (rho - c_star d_y rho)(k, 0) = S(k).
struct RobinExtension {
  std::vector<ModeIndex> modes;
  std::vector<std::complex<double>> trace_hat;
  /// Largest |rho - c_star d_y rho - S| over modes at y = 0.
  double robin_residual = 0.0;

  std::complex<double> field(std::size_t mode, double y) const;
  std::complex<double> normal_derivative(std::size_t mode, double y) const;
};

/// Requires gamma = 1.
RobinExtension solve_robin_extension(const FractionalProblem& p);

struct ExtensionOptions {
  int cells = 2000;
  /// The far cut sits where the WKB decay factor of the solution reaches exp(-decay_lengths).
  double decay_lengths = 30.0;
  /// Reject when the N and N/2 meshes disagree by more than this relative amount.
  double richardson_tolerance = 0.05;
};

/// One mode of the degenerate extension problem
///   xi^2 F = gamma^2 c_gamma^{2/gamma} y^{2 - 2/gamma} F'',  F(0) = 1,  F(Y) = 0,
/// with xi = 2 pi |k|.
struct ExtensionField {
  ModeIndex k{0, 0};
  double gamma = 1.0;
  std::vector<double> y;
  std::vector<double> values;
  /// -F'(0) on the full mesh.
  double neumann_at_0 = 0.0;
  /// -F'(0) on the mesh with half the cells.
  double neumann_coarse = 0.0;
  /// Second-order Richardson combination of the two.
  double neumann_extrapolated = 0.0;
};

ExtensionField extension_pde_neumann(double gamma, const ModeIndex& k,
                                     const ExtensionOptions& options = {});

}  // namespace kinfrac
